#ifndef STREAMLABEL_PIPELINE_HPP
#define STREAMLABEL_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <exception>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "streamlabel/bus.hpp"
#include "streamlabel/errors.hpp"
#include "streamlabel/hwsim.hpp"
#include "streamlabel/image.hpp"
#include "streamlabel/labeling.hpp"
#include "streamlabel/message.hpp"
#include "streamlabel/net.hpp"

namespace streamlabel {

enum class Engine { SoftwareLabeler, SimulatedHw };

inline const char* engine_name(Engine e) {
    return e == Engine::SimulatedHw ? "sim" : "sw";
}

struct PipelineConfig {
    LabelerConfig labeler;
    TimingModel timing;
    std::size_t fifo_capacity = 4096;
    std::size_t line_capacity = 1920;
    Engine engine = Engine::SimulatedHw;
    bool use_tcp = false;
    std::string registry_endpoint = registry_endpoint_from_env();
    std::int32_t frame_id = 0;
    std::size_t queue_capacity = 8;
    std::chrono::milliseconds take_timeout{10000};
    // Malformed payloads published on data_input before the real frame;
    // the component must log and skip them (crash isolation).
    std::vector<std::vector<std::uint8_t>> leading_noise;
};

// The five measured segments: input pub/sub hop, pre-label conversion,
// labeling itself, post-label conversion, output pub/sub hop.
struct LatencyBreakdown {
    double seg1_pub_sub_in_ms = 0;
    double seg2_pre_label_ms = 0;
    double seg3_label_ms = 0;
    double seg4_post_label_ms = 0;
    double seg5_pub_sub_out_ms = 0;
    double total_ms = 0;

    double segment(std::size_t i) const {
        switch (i) {
            case 0: return seg1_pub_sub_in_ms;
            case 1: return seg2_pre_label_ms;
            case 2: return seg3_label_ms;
            case 3: return seg4_post_label_ms;
            default: return seg5_pub_sub_out_ms;
        }
    }

    double segment_sum() const {
        return seg1_pub_sub_in_ms + seg2_pre_label_ms + seg3_label_ms + seg4_post_label_ms +
               seg5_pub_sub_out_ms;
    }

    std::string to_kv() const {
        std::ostringstream os;
        os << "seg1_pub_sub_in_ms=" << seg1_pub_sub_in_ms
           << " seg2_pre_label_ms=" << seg2_pre_label_ms << " seg3_label_ms=" << seg3_label_ms
           << " seg4_post_label_ms=" << seg4_post_label_ms
           << " seg5_pub_sub_out_ms=" << seg5_pub_sub_out_ms << " total_ms=" << total_ms;
        return os.str();
    }
};

struct PipelineResult {
    LabelImage labels;           // after equivalence resolution at display_result
    FrameMessage output_message; // as published on data_output (provisional labels)
    LatencyBreakdown latency;
    std::optional<SimReport> sim_report;
    std::uint32_t components = 0;
};

inline const char* const kTopicDataInput = "data_input";
inline const char* const kTopicDataOutput = "data_output";

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

struct PubPort {
    std::function<std::size_t(const std::vector<std::uint8_t>&)> publish_bytes;
};

struct SubPort {
    std::function<std::optional<std::vector<std::uint8_t>>(std::chrono::milliseconds)> take_bytes;
};

inline FrameMessage frame_from_binary(const BinaryImage& img, std::int32_t frame_id) {
    if (img.width > 0xFFFF || img.height > 0xFFFF)
        throw DataError("input_image: frame dimensions exceed 16-bit message fields");
    FrameMessage msg;
    msg.frame_id = frame_id;
    msg.width = static_cast<std::uint16_t>(img.width);
    msg.height = static_cast<std::uint16_t>(img.height);
    msg.pixels.assign(img.pixels.begin(), img.pixels.end());
    return msg;
}

}  // namespace detail

// Merge provisional labels of a first-pass image using the symmetrized
// adjacency of the ref set; this is the display-side second step, needing
// only the published label image.
inline LabelImage resolve_label_image(const LabelImage& provisional, const RefSet& ref_set) {
    EquivalenceSet eq;
    std::vector<std::pair<int, int>> nbrs;
    for (const auto& r : ref_set) nbrs.emplace_back(r.dx, r.dy);
    for (std::uint32_t y = 0; y < provisional.height; ++y) {
        for (std::uint32_t x = 0; x < provisional.width; ++x) {
            const std::uint32_t v = provisional.at(x, y);
            if (v == 0) continue;
            eq.ensure(v);
            for (auto [dx, dy] : nbrs) {
                const std::int64_t nx = static_cast<std::int64_t>(x) + dx;
                const std::int64_t ny = static_cast<std::int64_t>(y) + dy;
                if (nx < 0 || ny < 0 || nx >= provisional.width || ny >= provisional.height)
                    continue;
                const std::uint32_t w =
                    provisional.labels[static_cast<std::size_t>(ny) * provisional.width +
                                       static_cast<std::size_t>(nx)];
                if (w != 0) eq.unite(v, w);
            }
        }
    }
    LabelImage merged;
    merged.width = provisional.width;
    merged.height = provisional.height;
    merged.labels.resize(provisional.labels.size());
    for (std::size_t i = 0; i < provisional.labels.size(); ++i) {
        const std::uint32_t v = provisional.labels[i];
        merged.labels[i] = v == 0 ? 0 : eq.find(v);
    }
    return canonicalize(merged);
}

// Runs the five-node graph on one frame:
//   input_image -> [data_input] -> write2fpga -> engine -> read4fpga
//     -> [data_output] -> display_result
inline PipelineResult run_pipeline(const BinaryImage& img, const PipelineConfig& cfg) {
    using detail::Clock;

    // Transport setup. TCP mode resolves topics through the registry; the
    // in-process mode uses a private Bus.
    Bus bus;
    std::unique_ptr<RegistryServer> local_registry;  // unused; TCP callers run their own
    std::unique_ptr<TcpPublisher> tcp_pub_in, tcp_pub_out;
    std::unique_ptr<TcpSubscriber> tcp_sub_in, tcp_sub_out;
    detail::PubPort pub_in, pub_out;
    detail::SubPort sub_in, sub_out;

    if (cfg.use_tcp) {
        tcp_pub_in = std::make_unique<TcpPublisher>(kTopicDataInput, cfg.registry_endpoint);
        tcp_pub_out = std::make_unique<TcpPublisher>(kTopicDataOutput, cfg.registry_endpoint);
        tcp_sub_in = std::make_unique<TcpSubscriber>(kTopicDataInput, cfg.queue_capacity,
                                                     cfg.registry_endpoint,
                                                     std::chrono::milliseconds(50));
        tcp_sub_out = std::make_unique<TcpSubscriber>(kTopicDataOutput, cfg.queue_capacity,
                                                      cfg.registry_endpoint,
                                                      std::chrono::milliseconds(50));
        if (!tcp_pub_in->wait_for_peers(1, std::chrono::seconds(5)) ||
            !tcp_pub_out->wait_for_peers(1, std::chrono::seconds(5)))
            throw IoError("pipeline: TCP subscribers did not connect");
        pub_in.publish_bytes = [&](const auto& b) { return tcp_pub_in->publish_bytes(b); };
        pub_out.publish_bytes = [&](const auto& b) { return tcp_pub_out->publish_bytes(b); };
        sub_in.take_bytes = [&](auto t) { return tcp_sub_in->take_bytes(t); };
        sub_out.take_bytes = [&](auto t) { return tcp_sub_out->take_bytes(t); };
    } else {
        auto in_sub = bus.subscribe(kTopicDataInput, cfg.queue_capacity);
        auto out_sub = bus.subscribe(kTopicDataOutput, cfg.queue_capacity);
        Publisher in_pub = bus.advertise(kTopicDataInput);
        Publisher out_pub = bus.advertise(kTopicDataOutput);
        pub_in.publish_bytes = [&bus, in_pub](const auto& b) mutable {
            return in_pub.publish_bytes(b);
        };
        pub_out.publish_bytes = [&bus, out_pub](const auto& b) mutable {
            return out_pub.publish_bytes(b);
        };
        sub_in.take_bytes = [in_sub](auto t) { return in_sub->take_bytes(t); };
        sub_out.take_bytes = [out_sub](auto t) { return out_sub->take_bytes(t); };
    }

    Clock::time_point t0, t1, t2, t3, t4, t5;
    std::optional<SimReport> sim_report;
    FrameMessage output_message;
    std::exception_ptr component_error, display_error;
    bool display_got_frame = false;

    // write2fpga + engine + read4fpga: the FPGA-component analogue.
    std::thread component([&] {
        try {
            FrameMessage in_msg;
            while (true) {
                auto payload = sub_in.take_bytes(cfg.take_timeout);
                if (!payload) throw IoError("write2fpga: timed out waiting for data_input");
                try {
                    in_msg = decode_message(*payload);
                    t1 = Clock::now();
                    break;
                } catch (const DataError& e) {
                    std::cerr << "write2fpga: dropping malformed message: " << e.what() << "\n";
                }
            }

            // seg2: message words -> input word stream for the engine
            std::vector<std::uint32_t> words(in_msg.pixels.size());
            for (std::size_t i = 0; i < words.size(); ++i)
                words[i] = static_cast<std::uint32_t>(in_msg.pixels[i]);
            t2 = Clock::now();

            // seg3: labeling
            std::vector<std::uint32_t> label_words;
            if (cfg.engine == Engine::SimulatedHw) {
                HardwareSim sim(in_msg.width, in_msg.height, std::move(words), cfg.labeler,
                                cfg.timing, cfg.fifo_capacity, cfg.line_capacity);
                sim.run_to_completion();
                label_words = sim.output_words();
                sim_report = sim.report();
            } else {
                BinaryImage frame;
                frame.width = in_msg.width;
                frame.height = in_msg.height;
                frame.pixels.resize(words.size());
                for (std::size_t i = 0; i < words.size(); ++i)
                    frame.pixels[i] = words[i] != 0 ? 255 : 0;
                label_words = first_pass(frame, cfg.labeler).labels.labels;
            }
            t3 = Clock::now();

            // seg4: read4fpga builds the output frame and publishes it
            FrameMessage out_msg;
            out_msg.frame_id = in_msg.frame_id;
            out_msg.width = in_msg.width;
            out_msg.height = in_msg.height;
            out_msg.pixels.assign(label_words.begin(), label_words.end());
            const std::vector<std::uint8_t> encoded = encode_message(out_msg);
            t4 = Clock::now();
            pub_out.publish_bytes(encoded);
        } catch (...) {
            component_error = std::current_exception();
        }
    });

    LabelImage resolved;
    std::uint32_t components = 0;
    std::thread display([&] {
        try {
            auto payload = sub_out.take_bytes(cfg.take_timeout);
            if (!payload) return;  // component failed; its error wins
            t5 = Clock::now();
            output_message = decode_message(*payload);
            LabelImage provisional;
            provisional.width = output_message.width;
            provisional.height = output_message.height;
            provisional.labels.assign(output_message.pixels.begin(), output_message.pixels.end());
            resolved = resolve_label_image(provisional, cfg.labeler.refs);
            components = component_count(resolved);
            display_got_frame = true;
        } catch (...) {
            display_error = std::current_exception();
        }
    });

    // input_image node: publish noise (if any), then the frame.
    for (const auto& noise : cfg.leading_noise) pub_in.publish_bytes(noise);
    const FrameMessage in_msg = detail::frame_from_binary(img, cfg.frame_id);
    const std::vector<std::uint8_t> encoded_in = encode_message(in_msg);
    t0 = Clock::now();
    pub_in.publish_bytes(encoded_in);

    component.join();
    display.join();
    if (component_error) std::rethrow_exception(component_error);
    if (display_error) std::rethrow_exception(display_error);
    if (!display_got_frame) throw IoError("display_result: no frame received");

    PipelineResult result;
    result.labels = std::move(resolved);
    result.output_message = std::move(output_message);
    result.sim_report = sim_report;
    result.components = components;
    result.latency.seg1_pub_sub_in_ms = detail::ms_between(t0, t1);
    result.latency.seg2_pre_label_ms = detail::ms_between(t1, t2);
    result.latency.seg3_label_ms = detail::ms_between(t2, t3);
    result.latency.seg4_post_label_ms = detail::ms_between(t3, t4);
    result.latency.seg5_pub_sub_out_ms = detail::ms_between(t4, t5);
    result.latency.total_ms = detail::ms_between(t0, t5);
    return result;
}

struct BenchStats {
    struct Agg {
        double mean = 0;
        double min = 0;
        double max = 0;
    };
    std::size_t iterations = 0;
    Agg segments[5];
    Agg total;

    static constexpr const char* kSegmentNames[5] = {
        "1:pub_sub_in", "2:pre_label", "3:label", "4:post_label", "5:pub_sub_out"};

    std::string table() const {
        std::ostringstream os;
        os << "latency over " << iterations << " iterations (ms)\n";
        os << std::left << std::setw(16) << "segment" << std::right << std::setw(12) << "mean"
           << std::setw(12) << "min" << std::setw(12) << "max" << "\n";
        os << std::fixed << std::setprecision(3);
        for (std::size_t i = 0; i < 5; ++i)
            os << std::left << std::setw(16) << kSegmentNames[i] << std::right << std::setw(12)
               << segments[i].mean << std::setw(12) << segments[i].min << std::setw(12)
               << segments[i].max << "\n";
        os << std::left << std::setw(16) << "total" << std::right << std::setw(12) << total.mean
           << std::setw(12) << total.min << std::setw(12) << total.max << "\n";
        return os.str();
    }

    std::string to_kv() const {
        std::ostringstream os;
        os << "iterations=" << iterations;
        static constexpr const char* keys[5] = {"seg1", "seg2", "seg3", "seg4", "seg5"};
        for (std::size_t i = 0; i < 5; ++i)
            os << ' ' << keys[i] << "_mean_ms=" << segments[i].mean << ' ' << keys[i]
               << "_min_ms=" << segments[i].min << ' ' << keys[i] << "_max_ms=" << segments[i].max;
        os << " total_mean_ms=" << total.mean << " total_min_ms=" << total.min
           << " total_max_ms=" << total.max;
        return os.str();
    }
};

inline BenchStats bench(const BinaryImage& img, const PipelineConfig& cfg,
                        std::size_t iterations) {
    if (iterations < 1) throw DataError("bench: iterations must be >= 1");
    std::vector<LatencyBreakdown> runs;
    runs.reserve(iterations);
    for (std::size_t i = 0; i < iterations; ++i) runs.push_back(run_pipeline(img, cfg).latency);

    BenchStats stats;
    stats.iterations = iterations;
    auto aggregate = [&](auto value_of) {
        BenchStats::Agg agg;
        agg.min = agg.max = value_of(runs[0]);
        double sum = 0;
        for (const auto& r : runs) {
            const double v = value_of(r);
            sum += v;
            agg.min = std::min(agg.min, v);
            agg.max = std::max(agg.max, v);
        }
        agg.mean = sum / static_cast<double>(runs.size());
        return agg;
    };
    for (std::size_t i = 0; i < 5; ++i)
        stats.segments[i] = aggregate([i](const LatencyBreakdown& r) { return r.segment(i); });
    stats.total = aggregate([](const LatencyBreakdown& r) { return r.total_ms; });
    return stats;
}

// Synthetic frames for tests and the CLI, selected by a "pattern:" spec:
//   pattern:stripes:WxH[:stripe_width]
//   pattern:checker:WxH[:cell]
//   pattern:random:WxH[:density_percent[:seed]]
//   pattern:dots:WxH     (isolated pixels at even coordinates)
//   pattern:white:WxH / pattern:black:WxH
inline BinaryImage make_pattern(const std::string& spec) {
    std::vector<std::string> parts;
    std::istringstream is(spec);
    std::string part;
    while (std::getline(is, part, ':')) parts.push_back(part);
    if (parts.size() < 3 || parts[0] != "pattern")
        throw DataError("bad pattern spec: " + spec);
    const std::string& kind = parts[1];
    std::uint32_t w = 0, h = 0;
    if (std::sscanf(parts[2].c_str(), "%ux%u", &w, &h) != 2 || w < 1 || h < 1)
        throw DataError("bad pattern size: " + parts[2]);

    BinaryImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h, 0);
    auto set = [&](std::uint32_t x, std::uint32_t y, bool white) {
        img.pixels[static_cast<std::size_t>(y) * w + x] = white ? 255 : 0;
    };

    if (kind == "black") {
        // already all zero
    } else if (kind == "white") {
        std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t{255});
    } else if (kind == "stripes") {
        const std::uint32_t sw = parts.size() > 3 ? std::max(1, std::atoi(parts[3].c_str())) : 8;
        for (std::uint32_t y = 0; y < h; ++y)
            for (std::uint32_t x = 0; x < w; ++x) set(x, y, (x / sw) % 2 == 0);
    } else if (kind == "checker") {
        const std::uint32_t cell = parts.size() > 3 ? std::max(1, std::atoi(parts[3].c_str())) : 4;
        for (std::uint32_t y = 0; y < h; ++y)
            for (std::uint32_t x = 0; x < w; ++x) set(x, y, ((x / cell) + (y / cell)) % 2 == 0);
    } else if (kind == "random") {
        const int density = parts.size() > 3 ? std::atoi(parts[3].c_str()) : 50;
        const unsigned seed = parts.size() > 4 ? static_cast<unsigned>(std::atoi(parts[4].c_str()))
                                               : 12345u;
        std::mt19937 rng(seed);
        std::uniform_int_distribution<int> dist(0, 99);
        for (auto& px : img.pixels) px = dist(rng) < density ? 255 : 0;
    } else if (kind == "dots") {
        for (std::uint32_t y = 0; y < h; y += 2)
            for (std::uint32_t x = 0; x < w; x += 2) set(x, y, true);
    } else {
        throw DataError("unknown pattern kind: " + kind);
    }
    return img;
}

// Loads a frame from a "pattern:" spec or from a PGM/BMP file.
inline BinaryImage load_source(const std::string& source, std::uint8_t threshold) {
    if (source.rfind("pattern:", 0) == 0) return make_pattern(source);
    return binarize(load_image(read_file(source)), threshold);
}

}  // namespace streamlabel

#endif
