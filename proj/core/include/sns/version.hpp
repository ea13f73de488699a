#pragma once

#include <string_view>

namespace sns {

std::string_view version();

}  // namespace sns
