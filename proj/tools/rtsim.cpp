// Command-line front end for the simulator: batch runs, single traced
// runs, topology dumps and config validation.
//
//   rtsim run <config> [--out DIR] [--trace] [--quiet]
//   rtsim trace <config> --seed N [--out DIR]
//   rtsim topo <config> [--seed N]
//   rtsim validate <config>
//
// Output goes to --out, then $RTS_SIM_OUT, then the current directory.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rtsim/config.hpp"
#include "rtsim/harness.hpp"

namespace {

struct Options {
    std::string command;
    std::string config_path;
    std::string out_dir;
    bool trace = false;
    bool quiet = false;
    std::uint64_t seed = 1;
    bool seed_set = false;
};

void usage(std::ostream& os) {
    os << "usage: rtsim <run|trace|topo|validate> <config> [options]\n"
          "  run       execute the whole sweep, write <name>.csv and <name>.plot\n"
          "  trace     single run with an event trace on stdout (--seed N)\n"
          "  topo      dump the deployment as 'id x y energy zone' lines\n"
          "  validate  parse the config and report problems\n"
          "options:\n"
          "  --out DIR   output directory (default $RTS_SIM_OUT or '.')\n"
          "  --seed N    seed for trace/topo (default 1)\n"
          "  --trace     also write per-run trace files during 'run'\n"
          "  --quiet     suppress progress lines\n";
}

bool parse_args(int argc, char** argv, Options& opt, std::string& err) {
    if (argc < 3) {
        err = "missing command or config path";
        return false;
    }
    opt.command = argv[1];
    opt.config_path = argv[2];
    for (int i = 3; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--out" && i + 1 < argc) {
            opt.out_dir = argv[++i];
        } else if (arg == "--seed" && i + 1 < argc) {
            opt.seed = std::strtoull(argv[++i], nullptr, 10);
            opt.seed_set = true;
        } else if (arg == "--trace") {
            opt.trace = true;
        } else if (arg == "--quiet") {
            opt.quiet = true;
        } else {
            err = "unknown option '" + arg + "'";
            return false;
        }
    }
    return true;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string stem_of(const std::string& path) {
    const auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) name.erase(dot);
    return name;
}

rtsim::ScenarioConfig load(const Options& opt) {
    rtsim::ScenarioConfig cfg = rtsim::parse_config(slurp(opt.config_path));
    if (cfg.name == "scenario") cfg.name = stem_of(opt.config_path);
    return cfg;
}

std::string resolve_out_dir(const Options& opt, const rtsim::ScenarioConfig& cfg) {
    if (!opt.out_dir.empty()) return opt.out_dir;
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* env = std::getenv("RTS_SIM_OUT")) return env;
    return ".";
}

int cmd_run(const Options& opt) {
    rtsim::ScenarioConfig cfg = load(opt);
    const std::string dir = resolve_out_dir(opt, cfg);
    if (!opt.quiet) {
        std::cerr << "running " << cfg.name << ": " << cfg.deadlines.size() << " deadline(s) x "
                  << cfg.alphas.size() << " alpha(s) x " << cfg.seeds.size() << " seed(s)\n";
    }
    if (opt.trace) {
        for (double deadline : cfg.deadlines) {
            for (double alpha : cfg.alphas) {
                for (std::uint64_t seed : cfg.seeds) {
                    char name[256];
                    std::snprintf(name, sizeof(name), "%s/%s_d%g_a%g_s%llu.trace", dir.c_str(),
                                  cfg.name.c_str(), deadline, alpha,
                                  static_cast<unsigned long long>(seed));
                    std::ofstream tf(name);
                    rtsim::run_point(cfg, deadline, alpha, seed, &tf);
                }
            }
        }
    }
    const rtsim::ExperimentResult res = rtsim::run_experiment(cfg);
    rtsim::write_experiment(res, cfg, dir);
    if (!opt.quiet) {
        std::cerr << "wrote " << dir << "/" << cfg.name << ".csv and " << dir << "/" << cfg.name
                  << ".plot\n";
    }
    return 0;
}

int cmd_trace(const Options& opt) {
    const rtsim::ScenarioConfig cfg = load(opt);
    const double deadline = cfg.deadlines.front();
    const double alpha = cfg.alphas.front();
    if (!opt.out_dir.empty()) {
        const std::string path = opt.out_dir + "/" + cfg.name + ".trace";
        std::ofstream tf(path);
        if (!tf) throw std::runtime_error("cannot write " + path);
        rtsim::run_point(cfg, deadline, alpha, opt.seed, &tf);
        if (!opt.quiet) std::cerr << "wrote " << path << "\n";
    } else {
        rtsim::run_point(cfg, deadline, alpha, opt.seed, &std::cout);
    }
    return 0;
}

int cmd_topo(const Options& opt) {
    const rtsim::ScenarioConfig cfg = load(opt);
    std::cout << rtsim::topology_dump(rtsim::build_topology(cfg, opt.seed));
    return 0;
}

int cmd_validate(const Options& opt) {
    load(opt);
    std::cout << "ok\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Options opt;
    std::string err;
    if (!parse_args(argc, argv, opt, err)) {
        std::cerr << "rtsim: " << err << "\n";
        usage(std::cerr);
        return 2;
    }
    try {
        if (opt.command == "run") return cmd_run(opt);
        if (opt.command == "trace") return cmd_trace(opt);
        if (opt.command == "topo") return cmd_topo(opt);
        if (opt.command == "validate") return cmd_validate(opt);
        std::cerr << "rtsim: unknown command '" << opt.command << "'\n";
        usage(std::cerr);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rtsim: " << e.what() << "\n";
        return 1;
    }
}
