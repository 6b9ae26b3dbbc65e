#pragma once

#include <string>
#include <utility>
#include <vector>

namespace qflow::cli {

struct RunReport {
    std::string command_echo;
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> tasks;  // (name, status)
    std::vector<std::string> output_files;
    double wall_seconds = 0.0;
    int exit_code = 0;
};

// Exit codes: 0 success, 2 domain/input error, 3 numerical-convergence
// failure. argv excludes the program name.
int run(const std::vector<std::string>& args, RunReport* report = nullptr);

// FNV-1a hash of the computation-relevant arguments and input files.
std::string config_hash(const std::vector<std::string>& parts);

}  // namespace qflow::cli
