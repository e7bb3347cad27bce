#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wrf/checkpoint.hpp"
#include "wrf/dataset.hpp"
#include "wrf/oracle.hpp"
#include "wrf/render.hpp"
#include "wrf/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

// Uppercase WRF_<SUB>_<FLAG> environment override for every option.
void add_env_names(CLI::App* sub) {
    std::string prefix = "WRF_" + sub->get_name() + "_";
    for (char& c : prefix) {
        if (c == '-') c = '_';
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    for (CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        std::string env = prefix + name;
        for (char& c : env) {
            if (c == '-') c = '_';
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        opt->envname(env);
    }
}

void print_resolved_config(const CLI::App& sub) {
    std::cout << "# resolved configuration (" << sub.get_name() << ")\n";
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        std::string value = opt->count() ? opt->as<std::string>() : opt->get_default_str();
        std::cout << name << " = " << value << '\n';
    }
}

struct GenSynthArgs {
    std::string scene;
    std::string out;
    int tx_count = 250;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double split = 0.8;
};

int run_gen_synth(const GenSynthArgs& a) {
    if (a.tx_count <= 0) {
        throw std::invalid_argument("gen-synth: tx-count must be positive");
    }
    wrf::SyntheticSceneSpec spec = wrf::load_scene_spec(a.scene);
    if (a.seed_set) spec.seed = a.seed;
    const auto positions =
        wrf::sample_tx_positions(spec, static_cast<std::size_t>(a.tx_count),
                                 spec.seed * 0x9e3779b97f4a7c15ull + 3);
    wrf::generate_dataset(spec, positions, a.split, a.out);
    const auto n_train =
        static_cast<std::size_t>(std::llround(a.split * a.tx_count));
    std::cout << "wrote " << n_train << " train / " << (a.tx_count - n_train)
              << " test samples to " << a.out << '\n';
    return kExitOk;
}

struct TrainArgs {
    std::string dataset;
    std::string out = "model.ckpt";
    std::string log = "train.log";
    std::string init = "cloud";
    wrf::TrainConfig cfg;
};

int run_train(const TrainArgs& a) {
    a.cfg.validate();
    const wrf::Dataset ds = wrf::load_dataset(a.dataset);
    std::ofstream log(a.log);
    if (!log) {
        throw std::runtime_error("cannot write training log: " + a.log);
    }
    const wrf::TrainResult res = wrf::train(a.cfg, ds, &log);
    wrf::save_checkpoint(res.checkpoint, a.out);
    std::cout << "final N " << res.checkpoint.scene.count() << '\n';
    std::cout << "mean test SSIM " << res.mean_test_ssim << '\n';
    std::cout << "checkpoint " << a.out << '\n';
    return kExitOk;
}

struct PredictArgs {
    std::string checkpoint;
    std::vector<double> tx;
    std::string out;
    std::string format = "spect";
    int threads = 1;
};

int run_predict(const PredictArgs& a) {
    if (a.tx.size() != 3) {
        throw std::invalid_argument("predict: --tx needs exactly x,y,z");
    }
    const wrf::Checkpoint ckpt = wrf::load_checkpoint(a.checkpoint);
    const wrf::Vec3 tx(a.tx[0], a.tx[1], a.tx[2]);
    wrf::RenderConfig rcfg;
    rcfg.threads = a.threads;
    const auto t0 = std::chrono::steady_clock::now();
    const wrf::SpectrumImage img = wrf::render_pruned(ckpt.scene, tx, ckpt.net, rcfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (a.format == "pgm") {
        wrf::save_pgm(img, a.out);
    } else {
        wrf::save_spect(img, tx, a.out);
    }
    std::printf("render time %.3f ms\n",
                std::chrono::duration<double, std::milli>(t1 - t0).count());
    std::cout << "wrote " << a.out << '\n';
    return kExitOk;
}

struct EvalArgs {
    std::string checkpoint;
    std::string dataset;
    std::string split = "test";
    int threads = 1;
};

int run_eval(const EvalArgs& a) {
    const wrf::Checkpoint ckpt = wrf::load_checkpoint(a.checkpoint);
    const wrf::Dataset ds = wrf::load_dataset(a.dataset);
    const auto& split = a.split == "train" ? ds.train : ds.test;
    wrf::RenderConfig rcfg;
    rcfg.threads = a.threads;
    const wrf::EvalReport rep =
        wrf::evaluate(ckpt, split, rcfg, ds.has_cloud ? &ds.cloud : nullptr);
    for (std::size_t i = 0; i < rep.ssim.size(); ++i) {
        std::printf("sample %05zu ssim %.6f\n", i, rep.ssim[i]);
    }
    std::printf("mean_ssim %.6f\n", rep.mean_ssim);
    std::printf("n %zu\n", rep.n);
    std::printf("checkpoint_bytes %zu\n", rep.checkpoint_size);
    std::printf("latency_median_ms %.3f\n", rep.latency_median_ms);
    std::printf("latency_p90_ms %.3f\n", rep.latency_p90_ms);
    if (rep.chamfer >= 0.0) {
        std::printf("chamfer %.6f\n", rep.chamfer);
    }
    return kExitOk;
}

struct BenchArgs {
    std::vector<std::string> checkpoints;
    std::vector<double> tx{1.0, 1.0, 1.5};
    int renders = 30;
    int threads = 1;
};

int run_bench(const BenchArgs& a) {
    if (a.tx.size() != 3) {
        throw std::invalid_argument("bench: --tx needs exactly x,y,z");
    }
    if (a.renders < 20) {
        throw std::invalid_argument("bench: need at least 20 timed renders");
    }
    wrf::RenderConfig rcfg;
    rcfg.threads = a.threads;
    const wrf::Vec3 tx(a.tx[0], a.tx[1], a.tx[2]);
    std::printf("%-32s %10s %14s %14s %12s\n", "checkpoint", "N", "median_ms", "p90_ms",
                "bytes");
    for (const std::string& path : a.checkpoints) {
        const wrf::Checkpoint ckpt = wrf::load_checkpoint(path);
        (void)wrf::render_pruned(ckpt.scene, tx, ckpt.net, rcfg);  // warm-up
        std::vector<double> ms;
        ms.reserve(a.renders);
        for (int r = 0; r < a.renders; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            (void)wrf::render_pruned(ckpt.scene, tx, ckpt.net, rcfg);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        std::sort(ms.begin(), ms.end());
        const double median = ms[ms.size() / 2];
        const double p90 = ms[static_cast<std::size_t>(0.9 * (ms.size() - 1))];
        wrf::Checkpoint slim = ckpt;
        slim.has_moments = false;
        std::printf("%-32s %10zu %14.3f %14.3f %12zu\n", path.c_str(), ckpt.scene.count(),
                    median, p90, wrf::checkpoint_bytes(slim));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wireless radiance field gaussian splatting toolkit"};
    app.require_subcommand(1);

    GenSynthArgs gen;
    CLI::App* sub_gen = app.add_subcommand("gen-synth", "generate a synthetic dataset");
    sub_gen->set_config("--config");
    sub_gen->add_option("--scene", gen.scene, "scene description file")->required();
    sub_gen->add_option("--out", gen.out, "output dataset directory")->required();
    sub_gen->add_option("--tx-count", gen.tx_count, "number of transmitter poses")
        ->default_val(250);
    CLI::Option* gen_seed = sub_gen->add_option("--seed", gen.seed,
                                                "override the scene file seed");
    sub_gen->add_option("--split", gen.split, "train fraction")->default_val(0.8);

    TrainArgs tr;
    CLI::App* sub_train = app.add_subcommand("train", "train a model on a dataset");
    sub_train->set_config("--config");
    sub_train->add_option("--dataset", tr.dataset, "dataset directory")->required();
    sub_train->add_option("--out", tr.out, "checkpoint output path")
        ->default_val("model.ckpt");
    sub_train->add_option("--log", tr.log, "training log path")->default_val("train.log");
    sub_train->add_option("--m", tr.cfg.m, "total iterations")->default_val(20000);
    sub_train->add_option("--md", tr.cfg.m_d, "densification end")->default_val(2000);
    sub_train->add_option("--mp", tr.cfg.m_p, "pruning end")->default_val(4000);
    sub_train->add_option("--ip", tr.cfg.i_p, "prune interval")->default_val(1000);
    sub_train->add_option("--epsilon", tr.cfg.epsilon, "mask threshold")->default_val(0.01);
    sub_train->add_option("--lambda", tr.cfg.lambda, "mask regularizer weight")
        ->default_val(0.0);
    sub_train->add_option("--w", tr.cfg.w, "D-SSIM weight in the rendering loss")
        ->default_val(0.2);
    sub_train->add_option("--init", tr.init, "scene initialization")
        ->check(CLI::IsMember({"cloud", "random"}))
        ->default_val("cloud");
    sub_train->add_option("--random-count", tr.cfg.random_count,
                          "primitives for random init")
        ->default_val(1000);
    sub_train->add_option("--tau-g", tr.cfg.tau_g, "densify gradient threshold")
        ->default_val(2e-4);
    sub_train->add_option("--densify-interval", tr.cfg.densify_interval,
                          "steps between densifications")
        ->default_val(100);
    sub_train->add_option("--split-threshold", tr.cfg.split_scale_threshold,
                          "scale above which densify splits instead of clones")
        ->default_val(0.1);
    sub_train->add_option("--seed", tr.cfg.seed, "training seed")->default_val(1);
    sub_train->add_option("--threads", tr.cfg.threads, "render worker threads")
        ->default_val(1);
    sub_train->add_option("--log-interval", tr.cfg.log_interval, "iterations per log line")
        ->default_val(100);

    PredictArgs pr;
    CLI::App* sub_predict = app.add_subcommand("predict", "render one spectrum");
    sub_predict->set_config("--config");
    sub_predict->add_option("--checkpoint", pr.checkpoint, "model checkpoint")->required();
    sub_predict->add_option("--tx", pr.tx, "transmitter position x,y,z")
        ->required()
        ->delimiter(',')
        ->expected(3);
    sub_predict->add_option("--out", pr.out, "output file")->required();
    sub_predict->add_option("--format", pr.format, "output format")
        ->check(CLI::IsMember({"spect", "pgm"}))
        ->default_val("spect");
    sub_predict->add_option("--threads", pr.threads, "render worker threads")
        ->default_val(1);

    EvalArgs ev;
    CLI::App* sub_eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    sub_eval->set_config("--config");
    sub_eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
    sub_eval->add_option("--dataset", ev.dataset, "dataset directory")->required();
    sub_eval->add_option("--split", ev.split, "dataset split")
        ->check(CLI::IsMember({"train", "test"}))
        ->default_val("test");
    sub_eval->add_option("--threads", ev.threads, "render worker threads")->default_val(1);

    BenchArgs be;
    CLI::App* sub_bench = app.add_subcommand("bench", "latency/size table for checkpoints");
    sub_bench->set_config("--config");
    sub_bench->add_option("--checkpoints", be.checkpoints, "checkpoint files")
        ->required()
        ->delimiter(',');
    sub_bench->add_option("--tx", be.tx, "transmitter position x,y,z")
        ->delimiter(',')
        ->expected(3);
    sub_bench->add_option("--renders", be.renders, "timed renders per checkpoint")
        ->default_val(30);
    sub_bench->add_option("--threads", be.threads, "render worker threads")->default_val(1);

    for (CLI::App* sub : {sub_gen, sub_train, sub_predict, sub_eval, sub_bench}) {
        add_env_names(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    gen.seed_set = gen_seed->count() > 0;
    tr.cfg.init = tr.init == "random" ? wrf::TrainConfig::Init::kRandom
                                      : wrf::TrainConfig::Init::kCloud;

    try {
        if (app.got_subcommand(sub_gen)) {
            print_resolved_config(*sub_gen);
            return run_gen_synth(gen);
        }
        if (app.got_subcommand(sub_train)) {
            print_resolved_config(*sub_train);
            return run_train(tr);
        }
        if (app.got_subcommand(sub_predict)) {
            print_resolved_config(*sub_predict);
            return run_predict(pr);
        }
        if (app.got_subcommand(sub_eval)) {
            print_resolved_config(*sub_eval);
            return run_eval(ev);
        }
        if (app.got_subcommand(sub_bench)) {
            print_resolved_config(*sub_bench);
            return run_bench(be);
        }
    } catch (const wrf::NonFiniteLossError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
