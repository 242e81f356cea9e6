#include "parahom/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace parahom::kernels {
namespace {

const Table* best_available() {
    if (const Table* t = avx2_table()) return t;
    if (const Table* t = neon_table()) return t;
    return &scalar_table();
}

const Table* by_name(std::string_view name) {
    if (name == "scalar") return &scalar_table();
    if (name == "avx2") return avx2_table();
    if (name == "neon") return neon_table();
    if (name == "auto" || name.empty()) return best_available();
    return nullptr;
}

const Table* initial() {
    if (const char* env = std::getenv("PARAHOM_SIMD")) {
        if (const Table* t = by_name(env)) return t;
    }
    return best_available();
}

std::atomic<const Table*>& slot() {
    static std::atomic<const Table*> current{initial()};
    return current;
}

}  // namespace

const Table& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) {
    const Table* t = by_name(name);
    if (t == nullptr) return false;
    slot().store(t, std::memory_order_release);
    return true;
}

}  // namespace parahom::kernels
