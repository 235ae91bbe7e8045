#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace dgwc {

// Every recoverable failure surfaces as dgwc::Error with a message that
// names the offending shapes/values.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void msg_append(std::ostringstream&) {}
template <typename T, typename... Rest>
void msg_append(std::ostringstream& out, const T& v, const Rest&... rest) {
    out << v;
    msg_append(out, rest...);
}
}  // namespace detail

template <typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
    std::ostringstream out;
    detail::msg_append(out, parts...);
    throw Error(out.str());
}

template <typename... Parts>
void require(bool cond, const Parts&... parts) {
    if (!cond) fail(parts...);
}

}  // namespace dgwc
