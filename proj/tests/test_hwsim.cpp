#include <doctest.h>

#include <random>

#include "streamlabel/hwsim.hpp"

using namespace streamlabel;

namespace {

BinaryImage random_binary(std::uint32_t w, std::uint32_t h, double density, std::mt19937& rng) {
    BinaryImage img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    std::bernoulli_distribution white(density);
    for (auto& px : img.pixels) px = white(rng) ? 255 : 0;
    return img;
}

LabelerConfig wide_config() {
    LabelerConfig cfg;
    cfg.label_bits = 32;
    return cfg;
}

}  // namespace

TEST_CASE("estimate_cycles matches the per-line and per-frame arithmetic") {
    TimingModel m;
    CHECK(estimate_cycles(1920, 1, m) == 2400);
    CHECK(estimate_cycles(1920, 1080, m) == 2'592'000);
    CHECK(estimate_cycles(4, 1, m) == 5);
    CHECK(estimate_cycles(5, 1, m) == 10);  // partial group rounds up
    CHECK(estimate_cycles(1, 1, m) == 5);
}

TEST_CASE("run_frame labels equal first_pass labels") {
    std::mt19937 rng(11);
    const auto cfg = wide_config();
    const TimingModel model;
    for (int i = 0; i < 20; ++i) {
        const auto img = random_binary(64, 64, 0.5, rng);
        auto [fp_sim, report] = run_frame(img, cfg, model, 4096);
        const auto fp_sw = first_pass(img, cfg);
        REQUIRE(fp_sim.labels == fp_sw.labels);
        CHECK(fp_sim.labels_issued == fp_sw.labels_issued);
        CHECK(report.compute_cycles == estimate_cycles(img.width, img.height, model));
    }
}

TEST_CASE("full-HD all-black frame costs exactly 2.6M compute clocks") {
    BinaryImage img;
    img.width = 1920;
    img.height = 1080;
    img.pixels.assign(1920ull * 1080, 0);
    auto [fp, report] = run_frame(img, LabelerConfig{}, TimingModel{}, 4096);
    CHECK(report.compute_cycles == 2'592'000);
    CHECK(report.cycles_per_line == 2400);
    // 10 ns clock: the compute portion alone is 25.92 ms
    CHECK(report.compute_time_ns() == doctest::Approx(25.92e6));
    for (auto v : fp.labels.labels) REQUIRE(v == 0);
}

TEST_CASE("cycle formula exactness over random sizes") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<std::uint32_t> dim(1, 70);
    const TimingModel model;
    for (int i = 0; i < 25; ++i) {
        const auto img = random_binary(dim(rng), dim(rng), 0.4, rng);
        auto [fp, report] = run_frame(img, wide_config(), model, 64);
        REQUIRE(report.compute_cycles == estimate_cycles(img.width, img.height, model));
        REQUIRE(report.total_cycles >= report.compute_cycles);
    }
}

TEST_CASE("tiny fifo changes timing but never the data") {
    std::mt19937 rng(21);
    const auto cfg = wide_config();
    const TimingModel model;
    for (int i = 0; i < 10; ++i) {
        const auto img = random_binary(48, 16, 0.6, rng);
        auto [fp_small, rep_small] = run_frame(img, cfg, model, 1);
        auto [fp_big, rep_big] = run_frame(img, cfg, model, 4096);
        REQUIRE(fp_small.labels == fp_big.labels);
        REQUIRE(rep_small.total_cycles >= rep_big.total_cycles);
    }
}

TEST_CASE("step_cycle: finished simulation is a fixpoint") {
    BinaryImage img{4, 1, {255, 255, 0, 255}};
    HardwareSim sim(img.width, img.height, pixels_to_words(img), wide_config(), TimingModel{}, 16);
    sim.run_to_completion();
    REQUIRE(sim.done());
    const auto cycles = sim.total_cycles();
    const auto words = sim.output_words();
    sim.step_cycle();
    CHECK(sim.done());
    CHECK(sim.total_cycles() == cycles);
    CHECK(sim.output_words() == words);
}

TEST_CASE("step_cycle decomposition: manual stepping equals run_to_completion") {
    BinaryImage img{13, 7, {}};
    std::mt19937 rng(31);
    img.pixels.resize(13 * 7);
    std::bernoulli_distribution white(0.5);
    for (auto& px : img.pixels) px = white(rng) ? 255 : 0;

    HardwareSim a(img.width, img.height, pixels_to_words(img), wide_config(), TimingModel{}, 3);
    HardwareSim b(img.width, img.height, pixels_to_words(img), wide_config(), TimingModel{}, 3);
    a.run_to_completion();
    std::uint64_t guard = 0;
    while (!b.done() && guard++ < 1'000'000) b.step_cycle();
    REQUIRE(b.done());
    CHECK(a.total_cycles() == b.total_cycles());
    CHECK(a.output_words() == b.output_words());
    CHECK(a.report().compute_cycles == b.report().compute_cycles);
}

TEST_CASE("ping-pong parity flips at end of line") {
    BinaryImage img{4, 2, {255, 0, 255, 0, 0, 255, 0, 255}};
    HardwareSim sim(img.width, img.height, pixels_to_words(img), wide_config(), TimingModel{}, 16);
    CHECK(sim.parity() == 0);
    // run until the first line's 4 output words have been produced
    std::uint64_t guard = 0;
    while (sim.output_words().size() < 4 && guard++ < 100'000) sim.step_cycle();
    // one more group boundary at most before the flip is visible
    while (sim.parity() == 0 && !sim.done() && guard++ < 100'000) sim.step_cycle();
    CHECK(sim.parity() == 1);
    sim.run_to_completion();
    CHECK_FALSE(sim.pingpong_violation());
}

TEST_CASE("fifo conservation holds at every cycle") {
    BinaryImage img{17, 9, {}};
    std::mt19937 rng(17);
    img.pixels.resize(17 * 9);
    std::bernoulli_distribution white(0.7);
    for (auto& px : img.pixels) px = white(rng) ? 255 : 0;
    HardwareSim sim(img.width, img.height, pixels_to_words(img), wide_config(), TimingModel{}, 2);
    std::uint64_t guard = 0;
    while (!sim.done() && guard++ < 1'000'000) {
        sim.step_cycle();
        REQUIRE(sim.input_fifo().conserved());
        REQUIRE(sim.output_fifo().conserved());
        REQUIRE(sim.input_fifo().occupancy() <= sim.input_fifo().capacity());
        REQUIRE(sim.output_fifo().occupancy() <= sim.output_fifo().capacity());
    }
    REQUIRE(sim.done());
    CHECK(sim.input_fifo().words_in() == 17 * 9);
    CHECK(sim.output_fifo().words_out() == 17 * 9);
}

TEST_CASE("width beyond the line buffer is rejected") {
    BinaryImage img;
    img.width = 2000;
    img.height = 1;
    img.pixels.assign(2000, 0);
    CHECK_THROWS_WITH_AS(run_frame(img, LabelerConfig{}, TimingModel{}, 16),
                         "line buffer capacity exceeded", DataError);
    // configurable capacity admits the same frame
    auto [fp, rep] = run_frame(img, LabelerConfig{}, TimingModel{}, 16, 2048);
    CHECK(fp.labels.labels.size() == 2000);
}

TEST_CASE("sim report text and kv forms carry the cycle counts") {
    BinaryImage img{8, 2, std::vector<std::uint8_t>(16, 0)};
    auto [fp, report] = run_frame(img, LabelerConfig{}, TimingModel{}, 16);
    const auto kv = report.to_kv();
    CHECK(kv.find("compute_cycles=" + std::to_string(report.compute_cycles)) != std::string::npos);
    CHECK(kv.find("total_cycles=") != std::string::npos);
    CHECK(report.to_text().find("total cycles") != std::string::npos);
}
