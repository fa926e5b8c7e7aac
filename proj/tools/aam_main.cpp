#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aam/harness/harness.hpp"

using aam::harness::RunSpec;

namespace {

RunSpec build_spec(const std::string& runspec_path, const std::vector<std::string>& overrides) {
    RunSpec spec;
    if (!runspec_path.empty()) spec = RunSpec::from_file(runspec_path);
    for (const auto& kv : overrides) spec.apply_override(kv);
    return spec;
}

void add_common(CLI::App* cmd, std::string& runspec_path, std::vector<std::string>& overrides) {
    cmd->add_option("--runspec", runspec_path, "JSON run configuration");
    cmd->add_option("set", overrides, "key=value overrides (applied after --runspec)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AAM logistics experiments: simulate, train, evaluate"};
    app.require_subcommand(1);

    std::string runspec_path;
    std::vector<std::string> overrides;

    auto* train = app.add_subcommand("train", "PPO training run");
    add_common(train, runspec_path, overrides);

    auto* eval = app.add_subcommand("eval", "Evaluate one policy; writes metrics.csv + summary.json");
    add_common(eval, runspec_path, overrides);

    auto* compare = app.add_subcommand("compare", "Evaluate several policies on one environment");
    std::vector<std::string> policies;
    add_common(compare, runspec_path, overrides);
    compare->add_option("--policies", policies, "comma-free list of selector[:checkpoint]")
        ->required();

    auto* oracle = app.add_subcommand("oracle", "Centralized assignment baseline");
    add_common(oracle, runspec_path, overrides);

    auto* trace = app.add_subcommand("trace", "One episode with an event log and grid snapshots");
    add_common(trace, runspec_path, overrides);

    auto* pinfo = app.add_subcommand("policy-info", "Print checkpoint architecture details");
    std::string ckpt_path;
    pinfo->add_option("checkpoint", ckpt_path, "checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (pinfo->parsed()) {
            std::ifstream f(ckpt_path);
            if (!f) throw std::runtime_error("cannot open checkpoint: " + ckpt_path);
            nlohmann::json j;
            f >> j;
            auto net = aam::policy::PolicyNet::from_checkpoint(j);
            std::cout << net.info();
            return 0;
        }

        RunSpec spec = build_spec(runspec_path, overrides);
        if (train->parsed()) return aam::harness::cmd_train(spec);
        if (eval->parsed()) {
            aam::harness::cmd_eval(spec);
            return 0;
        }
        if (oracle->parsed()) return aam::harness::cmd_oracle(spec);
        if (trace->parsed()) return aam::harness::cmd_trace(spec);
        if (compare->parsed()) {
            std::vector<RunSpec> specs;
            for (const auto& p : policies) {
                RunSpec s = spec;
                auto colon = p.find(':');
                s.policy = p.substr(0, colon);
                if (colon != std::string::npos) s.checkpoint = p.substr(colon + 1);
                specs.push_back(s);
            }
            return aam::harness::cmd_compare(specs);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
