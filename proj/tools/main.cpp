// streamlabel: streaming image labeling with a cycle-accurate hardware
// model behind a small pub/sub pipeline.

#include <chrono>
#include <csignal>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "streamlabel/streamlabel.hpp"

using namespace streamlabel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitData = 3;

struct CommonFlags {
    std::uint8_t threshold = 128;
    std::string connectivity = "paper3";
    int label_bits = 8;
    std::string overflow = "error";

    LabelerConfig labeler() const {
        LabelerConfig cfg;
        if (connectivity == "paper3") cfg.refs = ref_set_for(Connectivity::Paper3);
        else if (connectivity == "conn4") cfg.refs = ref_set_for(Connectivity::Conn4);
        else if (connectivity == "conn8") cfg.refs = ref_set_for(Connectivity::Conn8);
        else throw CLI::ValidationError("--connectivity must be paper3, conn4 or conn8");
        cfg.label_bits = label_bits;
        cfg.overflow = overflow == "saturate" ? OverflowPolicy::Saturate : OverflowPolicy::Error;
        return cfg;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--threshold", threshold, "binarization threshold (default 128)");
        cmd->add_option("--connectivity", connectivity, "paper3 | conn4 | conn8")
            ->check(CLI::IsMember({"paper3", "conn4", "conn8"}));
        cmd->add_option("--label-bits", label_bits, "label width: 8, 16 or 32")
            ->check(CLI::IsMember({8, 16, 32}));
        cmd->add_option("--overflow", overflow, "error | saturate")
            ->check(CLI::IsMember({"error", "saturate"}));
    }
};

Engine parse_engine(const std::string& name) {
    return name == "sw" ? Engine::SoftwareLabeler : Engine::SimulatedHw;
}

volatile std::sig_atomic_t g_interrupted = 0;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming image labeling: hardware-model simulator, pub/sub pipeline, bench"};
    app.require_subcommand(1);

    // ---- label ----
    auto* label_cmd = app.add_subcommand("label", "two-pass labeling of an image file or pattern");
    std::string label_input, label_out = "labels.ppm";
    CommonFlags label_flags;
    label_cmd->add_option("input", label_input, "PGM/BMP file or pattern:<kind>:<WxH>[...]")
        ->required();
    label_cmd->add_option("--out", label_out, "output PPM path (default labels.ppm)");
    label_flags.attach(label_cmd);

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "cycle-accurate run of the labeling datapath");
    std::string sim_input, sim_out;
    CommonFlags sim_flags;
    std::size_t sim_fifo = 4096, sim_line = 1920;
    double sim_dma_rate = 1.0, sim_clock_ns = 10.0;
    sim_cmd->add_option("input", sim_input, "PGM/BMP file or pattern spec")->required();
    sim_cmd->add_option("--out", sim_out, "optional output PPM path (resolved labels)");
    sim_cmd->add_option("--fifo-capacity", sim_fifo, "FIFO capacity in 32-bit words");
    sim_cmd->add_option("--line-capacity", sim_line, "line buffer capacity in pixels");
    sim_cmd->add_option("--dma-words-per-cycle", sim_dma_rate, "FIFO transfer rate");
    sim_cmd->add_option("--clock-period-ns", sim_clock_ns, "clock period in ns (default 10)");
    sim_flags.attach(sim_cmd);

    // ---- pipeline ----
    auto* pipe_cmd = app.add_subcommand("pipeline", "run the five-node graph on one frame");
    std::string pipe_input, pipe_out, pipe_engine = "sim";
    std::string pipe_registry = registry_endpoint_from_env();
    CommonFlags pipe_flags;
    std::size_t pipe_fifo = 4096;
    bool pipe_tcp = false, pipe_dump = false;
    pipe_cmd->add_option("input", pipe_input, "PGM/BMP file or pattern spec")->required();
    pipe_cmd->add_option("--engine", pipe_engine, "sim | sw")
        ->check(CLI::IsMember({"sim", "sw"}));
    pipe_cmd->add_option("--out", pipe_out, "optional output PPM path");
    pipe_cmd->add_flag("--tcp", pipe_tcp, "use TCP transport via the registry");
    pipe_cmd->add_option("--registry", pipe_registry, "registry endpoint host:port");
    pipe_cmd->add_option("--fifo-capacity", pipe_fifo, "FIFO capacity in words");
    pipe_cmd->add_flag("--dump-labels", pipe_dump, "print every label value");
    pipe_flags.attach(pipe_cmd);

    // ---- bench ----
    auto* bench_cmd = app.add_subcommand("bench", "repeat the pipeline and report latency stats");
    std::string bench_input, bench_engine = "sim";
    CommonFlags bench_flags;
    std::size_t bench_iters = 10;
    bool bench_tcp = false;
    std::string bench_registry = registry_endpoint_from_env();
    bench_cmd->add_option("input", bench_input, "PGM/BMP file or pattern spec")->required();
    bench_cmd->add_option("--iterations", bench_iters, "number of runs (default 10)");
    bench_cmd->add_option("--engine", bench_engine, "sim | sw")
        ->check(CLI::IsMember({"sim", "sw"}));
    bench_cmd->add_flag("--tcp", bench_tcp, "use TCP transport via the registry");
    bench_cmd->add_option("--registry", bench_registry, "registry endpoint host:port");
    bench_flags.attach(bench_cmd);

    // ---- registry ----
    auto* reg_cmd = app.add_subcommand("registry", "serve the topic name registry");
    std::uint16_t reg_port = 11411;
    reg_cmd->add_option("--port", reg_port, "listen port (default 11411)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*label_cmd) {
            const auto img = load_source(label_input, label_flags.threshold);
            const auto fp = first_pass(img, label_flags.labeler());
            const auto resolved = resolve(fp);
            write_file(label_out, render_labels(resolved));
            std::cout << "components: " << component_count(resolved) << "\n";
            std::cout << "labels_issued=" << fp.labels_issued
                      << " overflowed=" << (fp.overflowed ? 1 : 0) << " out=" << label_out << "\n";
        } else if (*sim_cmd) {
            const auto img = load_source(sim_input, sim_flags.threshold);
            TimingModel model;
            model.dma_words_per_cycle = sim_dma_rate;
            model.clock_period_ns = sim_clock_ns;
            auto [fp, report] = run_frame(img, sim_flags.labeler(), model, sim_fifo, sim_line);
            std::cout << report.to_text();
            std::cout << report.to_kv() << "\n";
            if (!sim_out.empty()) write_file(sim_out, render_labels(resolve(fp)));
        } else if (*pipe_cmd) {
            PipelineConfig cfg;
            cfg.labeler = pipe_flags.labeler();
            cfg.engine = parse_engine(pipe_engine);
            cfg.fifo_capacity = pipe_fifo;
            cfg.use_tcp = pipe_tcp;
            cfg.registry_endpoint = pipe_registry;
            const auto img = load_source(pipe_input, pipe_flags.threshold);
            const auto result = run_pipeline(img, cfg);
            std::cout << "components: " << result.components << "\n";
            // label histogram: count of pixels per resolved label (top 10)
            std::map<std::uint32_t, std::size_t> histogram;
            for (auto v : result.labels.labels)
                if (v != 0) ++histogram[v];
            std::size_t shown = 0;
            for (const auto& [label, count] : histogram) {
                if (shown++ == 10) {
                    std::cout << "  ...\n";
                    break;
                }
                std::cout << "  label " << label << ": " << count << " px\n";
            }
            std::cout << result.latency.to_kv() << "\n";
            if (result.sim_report) std::cout << result.sim_report->to_kv() << "\n";
            if (pipe_dump) {
                for (std::uint32_t y = 0; y < result.labels.height; ++y) {
                    for (std::uint32_t x = 0; x < result.labels.width; ++x)
                        std::cout << result.labels.at(x, y) << (x + 1 < result.labels.width ? " " : "");
                    std::cout << "\n";
                }
            }
            if (!pipe_out.empty()) write_file(pipe_out, render_labels(result.labels));
        } else if (*bench_cmd) {
            PipelineConfig cfg;
            cfg.labeler = bench_flags.labeler();
            cfg.engine = parse_engine(bench_engine);
            cfg.use_tcp = bench_tcp;
            cfg.registry_endpoint = bench_registry;
            const auto img = load_source(bench_input, bench_flags.threshold);
            const auto stats = bench(img, cfg, bench_iters);
            std::cout << stats.table();
            std::cout << stats.to_kv() << "\n";
        } else if (*reg_cmd) {
            RegistryServer server(reg_port);
            std::cout << "registry listening on " << server.endpoint() << "\n";
            std::signal(SIGINT, [](int) { g_interrupted = 1; });
            std::signal(SIGTERM, [](int) { g_interrupted = 1; });
            while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            std::cout << "registry stopping\n";
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}
