#include <nonlocal/acceptance.hpp>
#include <nonlocal/particle_kernels.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    try {
        nonlocal::parallel::apply_worker_limit_from_env();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::vector<std::string> only(argv + 1, argv + argc);
    const auto results = nonlocal::run_acceptance(std::cout, only);
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
