#ifndef PARNN_ERROR_HPP
#define PARNN_ERROR_HPP

#include <sstream>
#include <stdexcept>
#include <string>

namespace parnn {

/// Error type thrown by every module. The message always names the
/// operation and the offending values (shapes, keys, ranks, indices).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}

template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& head, const Rest&... rest) {
    os << head;
    format_into(os, rest...);
}
} // namespace detail

/// Builds an Error from a stream of message pieces.
template <typename... Parts>
Error make_error(const Parts&... parts) {
    std::ostringstream os;
    detail::format_into(os, parts...);
    return Error(os.str());
}

template <typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
    throw make_error(parts...);
}

} // namespace parnn

#endif
