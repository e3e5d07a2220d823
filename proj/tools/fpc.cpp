#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpc/error.hpp"
#include "fpc/experiment.hpp"
#include "fpc/io.hpp"

extern char** environ;

namespace {

struct Flags {
    std::string config;
    std::map<std::string, std::string> values;
    std::vector<std::string> over;
    std::vector<std::string> sets;
};

void add_flags(CLI::App* sub, Flags& f)
{
    sub->add_option("--config", f.config, "Config file (key = value lines)");
    const std::vector<std::pair<std::string, std::string>> flags{
        {"density", "Density name"},
        {"points", "Read points from CSV instead of sampling"},
        {"n", "Number of samples"},
        {"seed", "Sampling and k-means seed"},
        {"epsilon", "Graph bandwidth or 'auto'"},
        {"delta", "KDE bandwidth or 'default'"},
        {"cutoff", "Kernel truncation radius or 'none'"},
        {"generator", "q_beta, q_rw_alpha, q_knf, q_quickshift, q_rw_limit, q_mean_shift"},
        {"alpha", "Reweighting exponent"},
        {"beta", "Interpolation weight in [0, 1]"},
        {"preset", "Rate constant preset: continuum, experiment, unit"},
        {"metric", "Embedding metric: l2 or diffusion"},
        {"method", "auto, matrix-exponential or integrate"},
        {"t", "Comma-separated times"},
        {"k", "Comma-separated cluster counts"},
        {"k-max", "Largest k in the energy profile"},
        {"restarts", "k-means restarts"},
        {"start", "Trajectory start coordinate"},
        {"out", "Output directory"},
        {"emit", "Comma list: trajectories, embeddings, clusters, energies, rates, all, none"},
        {"workers", "Parallel sweep workers"},
    };
    for (const auto& [name, help] : flags) {
        std::string key = name == "k-max" ? "k_max" : name;
        sub->add_option_function<std::string>(
            "--" + name, [&f, key](const std::string& v) { f.values[key] = v; }, help);
    }
    sub->add_option("--over", f.over, "Sweep axis as param=v1,v2,...");
    sub->add_option("--set", f.sets, "Any config key as key=value");
}

fpc::ExperimentConfig resolve(const Flags& f)
{
    fpc::ExperimentConfig c;
    if (!f.config.empty()) c = fpc::parse_config(fpc::read_text(f.config));
    fpc::apply_environment(c, environ);
    for (const auto& [k, v] : f.values) fpc::set_config_value(c, k, v);
    for (const auto& kv : f.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw fpc::InvalidInput("--set expects key=value, got '" + kv + "'");
        fpc::set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& kv : f.over) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw fpc::InvalidInput("--over expects param=v1,v2,..., got '" + kv + "'");
        fpc::set_config_value(c, "over." + kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Graph Fokker-Planck clustering dynamics"};
    app.set_version_flag("--version", std::string(fpc::kVersion));
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> subs{
        {"sample", "Draw samples and write points.csv"},
        {"graph", "Build the proximity graph and generator"},
        {"evolve", "Write trajectories from the start node"},
        {"embed", "Write embeddings at each time"},
        {"cluster", "Cluster embeddings and write labels and energies"},
        {"run", "Full pipeline with the configured emit flags"},
        {"sweep", "Cartesian parameter sweep"},
        {"pde-compare", "Compare graph dynamics with the finite-difference solver"},
        {"witten", "Similarity-transformed operator spectra"},
        {"config", "Print the resolved configuration"},
    };
    std::map<std::string, CLI::App*> handles;
    for (const auto& [name, help] : subs) {
        handles[name] = app.add_subcommand(name, help);
        add_flags(handles[name], flags);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string stage = "config";
    try {
        fpc::ExperimentConfig c = resolve(flags);
        const std::map<std::string, fpc::Stage> stages{{"sample", fpc::Stage::sample}, {"graph", fpc::Stage::graph},
                                                       {"evolve", fpc::Stage::evolve}, {"embed", fpc::Stage::embed},
                                                       {"cluster", fpc::Stage::cluster}, {"run", fpc::Stage::run}};
        for (const auto& [name, handle] : handles) {
            if (!handle->parsed()) continue;
            stage = name;
            if (name == "config") {
                fpc::validate_config(c);
                std::cout << fpc::serialize_config(c);
            } else if (auto it = stages.find(name); it != stages.end()) {
                auto r = fpc::run_experiment(c, it->second);
                std::cout << "wrote " << r.files.size() << " files to " << c.out << "\n";
            } else if (name == "sweep") {
                auto r = fpc::sweep(c);
                std::cout << "sweep: " << r.manifest["cells"] << " cells, " << r.manifest["errors"]
                          << " errors, output in " << c.out << "\n";
            } else if (name == "pde-compare") {
                auto r = fpc::pde_compare(c);
                std::cout << "pde-compare: report in " << c.out << "/report.json\n";
            } else if (name == "witten") {
                auto r = fpc::witten_report(c);
                std::cout << r.dump(2) << "\n";
            }
        }
    } catch (const fpc::InvalidInput& e) {
        std::cerr << "error (" << stage << "): " << e.what() << "\n";
        return 2;
    } catch (const fpc::NumericalError& e) {
        std::cerr << "numerical error (" << stage << "): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error (" << stage << "): " << e.what() << "\n";
        return 1;
    }
    return 0;
}
