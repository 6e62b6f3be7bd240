#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace vflow {

// All library errors are std::runtime_error with a "module.operation: cause"
// message so the CLI can report them uniformly.
template <typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    throw std::runtime_error(os.str());
}

template <typename... Parts>
void require(bool ok, const Parts&... parts) {
    if (!ok) fail(parts...);
}

}  // namespace vflow
