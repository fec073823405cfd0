#include "vrm/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace vrm::kernels {

const Table* avx2_table_impl();
const Table* neon_table_impl();

namespace {

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend pick_default() {
    if (const char* env = std::getenv("VRM_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0) return Backend::Avx2;
        if (std::strcmp(env, "neon") == 0) return Backend::Neon;
    }
    if (avx2_table_impl() != nullptr && cpu_supports_avx2()) return Backend::Avx2;
    if (neon_table_impl() != nullptr) return Backend::Neon;
    return Backend::Scalar;
}

std::atomic<const Table*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};

const Table* resolve(Backend b) {
    switch (b) {
        case Backend::Scalar: return &scalar_table();
        case Backend::Avx2:
            return cpu_supports_avx2() ? avx2_table_impl() : nullptr;
        case Backend::Neon: return neon_table_impl();
    }
    return nullptr;
}

void init_once() {
    if (g_active.load(std::memory_order_acquire) != nullptr) return;
    Backend b = pick_default();
    const Table* t = resolve(b);
    if (t == nullptr) {
        b = Backend::Scalar;
        t = &scalar_table();
    }
    g_backend.store(b, std::memory_order_relaxed);
    g_active.store(t, std::memory_order_release);
}

}  // namespace

const Table* backend_table(Backend b) { return resolve(b); }

const Table& active() {
    init_once();
    return *g_active.load(std::memory_order_acquire);
}

void force_backend(Backend b) {
    const Table* t = resolve(b);
    if (t == nullptr) {
        throw std::invalid_argument(std::string("kernel backend unavailable: ") + backend_name(b));
    }
    g_backend.store(b, std::memory_order_relaxed);
    g_active.store(t, std::memory_order_release);
}

Backend active_backend() {
    init_once();
    return g_backend.load(std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "unknown";
}

}  // namespace vrm::kernels
