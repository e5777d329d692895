#ifndef STREAMLABEL_HWSIM_HPP
#define STREAMLABEL_HWSIM_HPP

#include <cstdint>
#include <deque>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "streamlabel/errors.hpp"
#include "streamlabel/image.hpp"
#include "streamlabel/labeling.hpp"

namespace streamlabel {

// Bounded word queue. A write to a full FIFO is refused (the producer
// stalls); words are never dropped.
class Fifo {
public:
    explicit Fifo(std::size_t capacity) : capacity_(capacity) {}

    bool push(std::uint32_t word) {
        if (q_.size() >= capacity_) return false;
        q_.push_back(word);
        ++words_in_;
        return true;
    }

    std::optional<std::uint32_t> pop() {
        if (q_.empty()) return std::nullopt;
        const std::uint32_t w = q_.front();
        q_.pop_front();
        ++words_out_;
        return w;
    }

    bool full() const { return q_.size() >= capacity_; }
    bool empty() const { return q_.empty(); }
    std::size_t occupancy() const { return q_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t words_in() const { return words_in_; }
    std::uint64_t words_out() const { return words_out_; }

    bool conserved() const { return words_in_ == words_out_ + q_.size(); }

private:
    std::size_t capacity_;
    std::deque<std::uint32_t> q_;
    std::uint64_t words_in_ = 0;
    std::uint64_t words_out_ = 0;
};

struct TimingModel {
    std::uint32_t pixels_per_group = 4;
    std::uint32_t cycles_per_group = 5;
    double clock_period_ns = 10.0;        // 100 MHz
    double dma_words_per_cycle = 1.0;     // not calibrated to any real bus
};

inline std::uint64_t estimate_cycles(std::uint32_t width, std::uint32_t height,
                                     const TimingModel& model) {
    const std::uint64_t groups_per_line =
        (static_cast<std::uint64_t>(width) + model.pixels_per_group - 1) / model.pixels_per_group;
    return groups_per_line * model.cycles_per_group * height;
}

struct SimReport {
    std::uint64_t compute_cycles = 0;
    std::uint64_t transfer_cycles = 0;   // cycles in which at least one DMA word moved
    std::uint64_t total_cycles = 0;
    std::uint64_t input_stall_cycles = 0;
    std::uint64_t output_stall_cycles = 0;
    std::uint64_t cycles_per_line = 0;
    double clock_period_ns = 10.0;

    double frame_time_ns() const { return static_cast<double>(total_cycles) * clock_period_ns; }
    double compute_time_ns() const { return static_cast<double>(compute_cycles) * clock_period_ns; }

    std::string to_kv() const {
        std::ostringstream os;
        os << "compute_cycles=" << compute_cycles << " transfer_cycles=" << transfer_cycles
           << " total_cycles=" << total_cycles << " input_stall_cycles=" << input_stall_cycles
           << " output_stall_cycles=" << output_stall_cycles
           << " cycles_per_line=" << cycles_per_line << " frame_time_ms=" << frame_time_ns() / 1e6
           << " compute_time_ms=" << compute_time_ns() / 1e6;
        return os.str();
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "cycles per line   : " << cycles_per_line << "\n"
           << "compute cycles    : " << compute_cycles << "\n"
           << "transfer cycles   : " << transfer_cycles << "\n"
           << "input stalls      : " << input_stall_cycles << "\n"
           << "output stalls     : " << output_stall_cycles << "\n"
           << "total cycles      : " << total_cycles << "\n"
           << "frame time        : " << frame_time_ns() / 1e6 << " ms (clock "
           << clock_period_ns << " ns)\n";
        return os.str();
    }
};

// Behavioral model of the streaming datapath: input/output FIFOs fed by a
// DMA at a fixed word rate, one line of pixel memory, two ping-pong label
// line buffers, and the labeling core running on the
// cycles_per_group-per-pixels_per_group cadence.
class HardwareSim {
public:
    HardwareSim(std::uint32_t width, std::uint32_t height, std::vector<std::uint32_t> input_words,
                LabelerConfig cfg, TimingModel model, std::size_t fifo_capacity,
                std::size_t line_capacity = 1920)
        : width_(width),
          height_(height),
          input_(std::move(input_words)),
          cfg_(std::move(cfg)),
          model_(model),
          in_fifo_(fifo_capacity),
          out_fifo_(fifo_capacity),
          memory_img_(line_capacity, 0) {
        if (width_ < 1 || height_ < 1) throw DataError("hwsim: empty frame");
        if (width_ > line_capacity) throw DataError("line buffer capacity exceeded");
        if (input_.size() != static_cast<std::size_t>(width_) * height_)
            throw DataError("hwsim: input word count does not match frame size");
        label_line_[0].assign(line_capacity, 0);
        label_line_[1].assign(line_capacity, 0);
        refs_.resize(cfg_.refs.size());
    }

    bool done() const { return core_finished() && output_.size() == input_.size(); }

    // Advances exactly one clock. Stepping a finished simulation is a no-op.
    void step_cycle() {
        if (done()) return;
        bool moved = false;

        // Output DMA drains first so the core sees freed space this cycle.
        out_credit_ = std::min(out_credit_ + model_.dma_words_per_cycle,
                               std::max(1.0, model_.dma_words_per_cycle));
        while (out_credit_ >= 1.0 && !out_fifo_.empty()) {
            output_.push_back(*out_fifo_.pop());
            out_credit_ -= 1.0;
            moved = true;
        }

        // Input DMA.
        in_credit_ = std::min(in_credit_ + model_.dma_words_per_cycle,
                              std::max(1.0, model_.dma_words_per_cycle));
        bool input_blocked = false;
        while (in_credit_ >= 1.0 && fed_ < input_.size()) {
            if (!in_fifo_.push(input_[fed_])) {
                input_blocked = true;
                break;
            }
            ++fed_;
            in_credit_ -= 1.0;
            moved = true;
        }
        if (input_blocked) ++input_stalls_;

        step_core();

        ++total_cycles_;
        if (moved) ++transfer_cycles_;
    }

    void run_to_completion() {
        while (!done()) step_cycle();
    }

    SimReport report() const {
        SimReport r;
        r.compute_cycles = compute_cycles_;
        r.transfer_cycles = transfer_cycles_;
        r.total_cycles = total_cycles_;
        r.input_stall_cycles = input_stalls_;
        r.output_stall_cycles = output_stalls_;
        r.cycles_per_line = estimate_cycles(width_, 1, model_);
        r.clock_period_ns = model_.clock_period_ns;
        return r;
    }

    FirstPassResult first_pass_result() const {
        FirstPassResult fp;
        fp.labels.width = width_;
        fp.labels.height = height_;
        fp.labels.labels = output_;
        fp.equivalences = equivalences_;
        fp.merge_pairs = merge_pairs_;
        fp.labels_issued = state_.current_label;
        fp.overflowed = state_.overflowed;
        return fp;
    }

    const std::vector<std::uint32_t>& output_words() const { return output_; }
    const Fifo& input_fifo() const { return in_fifo_; }
    const Fifo& output_fifo() const { return out_fifo_; }
    std::uint64_t total_cycles() const { return total_cycles_; }
    int parity() const { return parity_; }
    bool pingpong_violation() const { return pingpong_violation_; }

private:
    bool core_finished() const { return y_ == height_; }

    std::uint32_t group_pixels() const {
        // pixels covered by the current group (last group of a line may be short)
        const std::uint32_t group_start = (x_ / model_.pixels_per_group) * model_.pixels_per_group;
        const std::uint32_t remaining = width_ - group_start;
        return remaining < model_.pixels_per_group ? remaining : model_.pixels_per_group;
    }

    void step_core() {
        if (core_finished()) return;

        const std::uint32_t in_group = x_ % model_.pixels_per_group;
        if (in_group < group_pixels() && phase_ < group_pixels()) {
            // pixel-consuming cycle: needs an input word and output space
            if (in_fifo_.empty()) {
                ++input_stalls_;
                return;
            }
            if (out_fifo_.full()) {
                ++output_stalls_;
                return;
            }
            const std::uint32_t word = *in_fifo_.pop();
            memory_img_[x_] = word;
            const std::uint32_t label = label_current_pixel(word);
            write_label(x_, label);
            out_fifo_.push(label);
            ++x_;
        }
        ++phase_;
        ++compute_cycles_;
        if (phase_ == model_.cycles_per_group) {
            phase_ = 0;
            if (x_ == width_) {
                // end of line: ping-pong parity flips
                x_ = 0;
                ++y_;
                parity_ ^= 1;
                line_read_touched_[0] = line_read_touched_[1] = false;
                line_write_touched_[0] = line_write_touched_[1] = false;
            }
        }
    }

    std::uint32_t label_current_pixel(std::uint32_t word) {
        for (std::size_t k = 0; k < cfg_.refs.size(); ++k) {
            const std::int64_t nx = static_cast<std::int64_t>(x_) + cfg_.refs[k].dx;
            if (nx < 0 || nx >= width_) {
                refs_[k] = 0;
            } else if (cfg_.refs[k].dy == 0) {
                refs_[k] = read_label_current_line(static_cast<std::uint32_t>(nx));
            } else {
                refs_[k] = y_ > 0 ? read_label_previous_line(static_cast<std::uint32_t>(nx)) : 0;
            }
        }
        const std::uint8_t new_pixel = word != 0 ? 255 : 0;
        return label_pixel(new_pixel, refs_, state_, cfg_, equivalences_, &merge_pairs_);
    }

    std::uint32_t read_label_current_line(std::uint32_t x) {
        // current-line labels live in the write buffer (already written this line)
        line_read_touched_[parity_] = true;
        check_pingpong();
        return label_line_[parity_][x];
    }

    std::uint32_t read_label_previous_line(std::uint32_t x) {
        line_read_touched_[parity_ ^ 1] = true;
        return label_line_[parity_ ^ 1][x];
    }

    void write_label(std::uint32_t x, std::uint32_t label) {
        line_write_touched_[parity_] = true;
        check_pingpong();
        label_line_[parity_][x] = label;
    }

    void check_pingpong() {
        // the previous-line buffer must never be written while being read
        if (line_write_touched_[parity_ ^ 1] && line_read_touched_[parity_ ^ 1])
            pingpong_violation_ = true;
    }

    std::uint32_t width_;
    std::uint32_t height_;
    std::vector<std::uint32_t> input_;
    LabelerConfig cfg_;
    TimingModel model_;

    Fifo in_fifo_;
    Fifo out_fifo_;
    std::vector<std::uint32_t> memory_img_;
    std::vector<std::uint32_t> label_line_[2];
    int parity_ = 0;

    std::vector<std::uint32_t> refs_;
    LabelGeneratorState state_;
    EquivalenceSet equivalences_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> merge_pairs_;

    std::size_t fed_ = 0;
    std::vector<std::uint32_t> output_;
    std::uint32_t x_ = 0;
    std::uint32_t y_ = 0;
    std::uint32_t phase_ = 0;
    double in_credit_ = 0.0;
    double out_credit_ = 0.0;

    std::uint64_t compute_cycles_ = 0;
    std::uint64_t transfer_cycles_ = 0;
    std::uint64_t total_cycles_ = 0;
    std::uint64_t input_stalls_ = 0;
    std::uint64_t output_stalls_ = 0;

    bool line_read_touched_[2] = {false, false};
    bool line_write_touched_[2] = {false, false};
    bool pingpong_violation_ = false;
};

inline std::vector<std::uint32_t> pixels_to_words(const BinaryImage& img) {
    return std::vector<std::uint32_t>(img.pixels.begin(), img.pixels.end());
}

inline std::pair<FirstPassResult, SimReport> run_frame(const BinaryImage& img,
                                                       const LabelerConfig& cfg,
                                                       const TimingModel& model,
                                                       std::size_t fifo_capacity,
                                                       std::size_t line_capacity = 1920) {
    HardwareSim sim(img.width, img.height, pixels_to_words(img), cfg, model, fifo_capacity,
                    line_capacity);
    sim.run_to_completion();
    return {sim.first_pass_result(), sim.report()};
}

}  // namespace streamlabel

#endif
