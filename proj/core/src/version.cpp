#include "sns/version.hpp"

namespace sns {

std::string_view version() { return SNS_VERSION_STRING; }

}  // namespace sns
