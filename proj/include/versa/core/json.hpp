#pragma once

#include <json.hpp>

namespace versa {
using json = nlohmann::json;
}
