// Stand-in solver for exercising the subprocess protocol.
//
//   echo_stub --seed S [--instance FILE] [--log FILE] [--fail CODE]
//             [--sleep SECONDS] [--garbage] [--noise-sd SD]
//
// Prints a few progress lines, then its performance value on the last line:
// the first number in FILE (0 if absent) plus SD times the first normal
// deviate of a Philox stream seeded with S. --log appends "instance seed" to
// FILE so tests can count invocations.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "algocmp/random.hpp"
#include "algocmp/report.hpp"

int main(int argc, char** argv) {
    CLI::App app{"protocol test stub"};
    std::uint64_t seed = 0;
    std::string instance, log;
    int fail = 0;
    double sleep_s = 0.0;
    double noise_sd = 1.0;
    bool garbage = false;
    app.add_option("--seed", seed)->required();
    app.add_option("--instance", instance);
    app.add_option("--log", log);
    app.add_option("--fail", fail);
    app.add_option("--sleep", sleep_s);
    app.add_option("--noise-sd", noise_sd);
    app.add_flag("--garbage", garbage);
    CLI11_PARSE(app, argc, argv);

    if (!log.empty()) {
        std::ofstream(log, std::ios::app) << instance << ' ' << seed << '\n';
    }
    std::cout << "echo_stub starting, seed " << seed << "\n";
    std::cerr << "diagnostic chatter on stderr\n";
    if (sleep_s > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
    if (fail != 0) {
        std::cout << "giving up\n";
        return fail;
    }
    double offset = 0.0;
    if (!instance.empty()) {
        std::ifstream in(instance);
        if (!(in >> offset)) offset = 0.0;
    }
    algocmp::PhiloxStream rng(seed);
    const double value = offset + noise_sd * rng.normal();
    std::cout << "iteration 1 best " << value + 1.0 << "\n";
    std::cout << "iteration 2 best " << value << "\n";
    if (garbage) {
        std::cout << "done (no value)\n";
        return 0;
    }
    std::cout << algocmp::format_roundtrip(value) << "\n";
    return 0;
}
