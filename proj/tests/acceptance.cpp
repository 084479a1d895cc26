// Runs every acceptance criterion with the pinned sample sizes and prints one
// line per criterion. Writes acceptance_manifest.json next to the binary.
#include "gfrag/acceptance.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    gfrag::AcceptanceSettings settings;
    for (int i = 1; i < argc; ++i) settings.only.push_back(std::stoi(argv[i]));
    if (const char* t = std::getenv("GFRAG_THREADS")) settings.threads = static_cast<unsigned>(std::stoul(t));
    const auto results = gfrag::run_acceptance(settings, [](const gfrag::CriterionResult& r) {
        std::cout << gfrag::summary_line(r) << std::endl;
    });
    const auto manifest = gfrag::acceptance_manifest(results, settings);
    std::ofstream("acceptance_manifest.json") << manifest.dump(2) << "\n";
    std::cout << manifest["passed"].get<std::size_t>() << "/" << results.size() << " criteria passed" << std::endl;
    return manifest["all_pass"].get<bool>() ? 0 : 1;
}
