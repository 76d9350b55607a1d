#pragma once

#include "hnet/network.hpp"

#include <json.hpp>

#include <string>

namespace hnet {

nlohmann::json scalar_to_json(const ExactScalar& s);
ExactScalar scalar_from_json(const nlohmann::json& j);

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

std::string dump_network(const Network& net);
Network parse_network(const std::string& text);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace hnet
