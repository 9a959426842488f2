// Writes the deterministic fixture corpus used by the smoke tests.
#include <cstdlib>
#include <iostream>
#include <string>

#include "dermfair/error.hpp"
#include "fixture_gen.hpp"

int main(int argc, char** argv) {
    if (argc < 2 || argc > 3) {
        std::cerr << "usage: make_fixtures OUT_DIR [SEED]\n";
        return 2;
    }
    try {
        const std::uint64_t seed = argc == 3 ? std::stoull(argv[2]) : 7;
        const auto c = dermfair::fixtures::write_corpus(argv[1], seed);
        std::cout << "real=" << c.real_count << " synthetic=" << c.synthetic_count
                  << " metadata=" << c.metadata.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
