#pragma once

#include <cstdlib>
#include <string>

#ifndef LVD_DATA_DIR_DEFAULT
#define LVD_DATA_DIR_DEFAULT ""
#endif

namespace lvd {

// Data directory resolution: LVD_DATA_DIR env var, then the compile-time
// default (the repo's data/ tree).
inline std::string data_dir() {
  if (const char* env = std::getenv("LVD_DATA_DIR"); env && *env) return env;
  return LVD_DATA_DIR_DEFAULT;
}

}  // namespace lvd
