#ifndef PERPSCALE_VERSION_HPP
#define PERPSCALE_VERSION_HPP

namespace perpscale {

inline constexpr const char* kVersion = "0.1.0";

}

#endif
