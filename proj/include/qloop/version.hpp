#pragma once

#define QLOOP_VERSION_MAJOR 0
#define QLOOP_VERSION_MINOR 1
#define QLOOP_VERSION_PATCH 0
#define QLOOP_VERSION_STRING "0.1.0"

namespace qloop {
inline const char* version() { return QLOOP_VERSION_STRING; }
}
