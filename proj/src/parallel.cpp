#include "kinetic/parallel.hpp"

#include <cstdlib>
#include <string>

namespace kinetic {

int worker_count() {
    static const int count = [] {
        if (const char* env = std::getenv("KINETIC_THREADS")) {
            try {
                const int n = std::stoi(env);
                if (n > 0) return n;
            } catch (...) {
            }
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }();
    return count;
}

}  // namespace kinetic
