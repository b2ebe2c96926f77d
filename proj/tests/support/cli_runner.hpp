#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace testutil {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the binquant binary with the given argument string, capturing stdout
// and stderr. `env` is prepended verbatim (e.g. "BINQUANT_THREADS=4").
inline CliResult run_cli(const std::filesystem::path& binary, const std::string& args,
                         const std::filesystem::path& scratch, const std::string& env = "") {
    const auto out_path = scratch / "cli_stdout.txt";
    const auto err_path = scratch / "cli_stderr.txt";
    const std::string command = (env.empty() ? "" : env + " ") + "'" + binary.string() + "' " +
                                args + " > '" + out_path.string() + "' 2> '" +
                                err_path.string() + "'";
    const int status = std::system(command.c_str());

    CliResult result;
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    }
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>()};
    };
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

} // namespace testutil
