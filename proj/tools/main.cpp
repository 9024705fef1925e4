#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "run.hpp"

int main(int argc, char** argv)
{
    using namespace cartan::cli;
    CLI::App app{"Moving frames, Maurer-Cartan structure equations and involutivity tests"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Run a command on a problem file");
    std::string file, command, out_path;
    Options opt;
    run_cmd->add_option("file", file, "Problem file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("command", command, "Command")->required()->check(CLI::IsMember(commands()));
    run_cmd->add_option("--order", opt.order, "Truncation order");
    run_cmd->add_option("--m", opt.m, "Character parameter (0: number of variables)");
    run_cmd->add_option("--priority", opt.priority, "Class order, class 1 first, e.g. u,p,x,q");
    run_cmd->add_option("--stirling-variant", opt.stirling, "printed or alternate")
        ->check(CLI::IsMember({"printed", "alternate"}));
    run_cmd->add_option("--tol", opt.tol, "Signature comparator tolerance");
    run_cmd->add_option("--out", out_path, "Also write the report to this path");

    CLI11_PARSE(app, argc, argv);

    std::ifstream in(file);
    std::stringstream buf;
    buf << in.rdbuf();
    auto outcome = run_text(buf.str(), command, opt);
    auto text = outcome.report.text();
    std::cout << text;
    if (!out_path.empty()) {
        std::ofstream os(out_path);
        if (!os) {
            std::cerr << "cannot write " << out_path << "\n";
            return kDiagnostic;
        }
        os << text;
    }
    if (outcome.exit_code != kOk)
        std::cerr << outcome.report.value("error") << "\n";
    return outcome.exit_code;
}
