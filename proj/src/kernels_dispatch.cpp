#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "stochbond/kernels/kernels.hpp"

namespace stochbond::kernels {

namespace {

const Ops* g_active = nullptr;

const Ops* resolve(const char* name) {
    if (!name || std::strcmp(name, "auto") == 0) {
        if (const Ops* v = avx2_ops()) return v;
        return &scalar_ops();
    }
    if (std::strcmp(name, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(name, "avx2") == 0) {
        if (const Ops* v = avx2_ops()) return v;
        throw std::runtime_error("kernels: avx2 backend requested but not supported on this CPU");
    }
    throw std::runtime_error(std::string("kernels: unknown backend '") + name + "'");
}

}  // namespace

const Ops& active() {
    if (!g_active) g_active = resolve(std::getenv("STOCHBOND_KERNELS"));
    return *g_active;
}

void force_backend(const char* name) { g_active = resolve(name); }

}  // namespace stochbond::kernels
