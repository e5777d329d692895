#ifndef STREAMLABEL_LABELING_HPP
#define STREAMLABEL_LABELING_HPP

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "streamlabel/errors.hpp"
#include "streamlabel/image.hpp"

namespace streamlabel {

// Already-scanned neighbor offset: dy in {-1, 0}, and dy == 0 implies dx < 0.
struct RefOffset {
    int dx = 0;
    int dy = 0;
    bool operator==(const RefOffset&) const = default;
};

using RefSet = std::vector<RefOffset>;

enum class Connectivity { Paper3, Conn4, Conn8 };

// Paper3 is the three-reference-input circuit: previous pixel plus two
// previous-line positions. Conn4/Conn8 are the classic raster masks.
inline RefSet ref_set_for(Connectivity c) {
    switch (c) {
        case Connectivity::Conn4:
            return {{-1, 0}, {0, -1}};
        case Connectivity::Conn8:
            return {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
        case Connectivity::Paper3:
        default:
            return {{-1, 0}, {0, -1}, {1, -1}};
    }
}

inline bool valid_ref_set(const RefSet& refs) {
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& r = refs[i];
        if (r.dy != 0 && r.dy != -1) return false;
        if (r.dy == 0 && r.dx >= 0) return false;
        for (std::size_t j = 0; j < i; ++j)
            if (refs[j] == r) return false;
    }
    return true;
}

enum class OverflowPolicy { Error, Saturate };

struct LabelerConfig {
    RefSet refs = ref_set_for(Connectivity::Paper3);
    int label_bits = 8;  // 8, 16 or 32
    OverflowPolicy overflow = OverflowPolicy::Error;

    std::uint32_t max_label() const {
        if (label_bits == 32) return 0xFFFFFFFFu;
        return (1u << label_bits) - 1u;
    }
};

// Union-find over provisional labels 1..n; 0 (background) never enters.
class EquivalenceSet {
public:
    void ensure(std::uint32_t label) {
        while (parent_.size() <= label) parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    }

    std::uint32_t find(std::uint32_t label) const {
        std::uint32_t root = label;
        while (parent_[root] != root) root = parent_[root];
        // path compression
        std::uint32_t cur = label;
        while (parent_[cur] != root) {
            std::uint32_t next = parent_[cur];
            parent_[cur] = root;
            cur = next;
        }
        return root;
    }

    void unite(std::uint32_t a, std::uint32_t b) {
        ensure(a);
        ensure(b);
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent_[b] = a;  // keep the smaller label as representative
        else parent_[a] = b;
    }

    std::size_t capacity() const { return parent_.size(); }

private:
    mutable std::vector<std::uint32_t> parent_{0};
};

// The circuit registers of the per-pixel labeler.
struct LabelGeneratorState {
    std::uint32_t current_label = 0;  // last freshly issued label
    bool overflowed = false;
};

struct FirstPassResult {
    LabelImage labels;  // provisional
    EquivalenceSet equivalences;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> merge_pairs;
    std::uint32_t labels_issued = 0;
    bool overflowed = false;
};

// One pixel through the labeling rule: black yields 0; a white pixel with
// all-zero references takes a fresh label; otherwise the minimum nonzero
// reference wins and every distinct nonzero reference pair is recorded as
// an equivalence.
inline std::uint32_t label_pixel(std::uint8_t new_pixel, std::span<const std::uint32_t> refs,
                                 LabelGeneratorState& state, const LabelerConfig& cfg,
                                 EquivalenceSet& eq,
                                 std::vector<std::pair<std::uint32_t, std::uint32_t>>* pairs_out =
                                     nullptr) {
    if (new_pixel == 0) return 0;

    std::uint32_t min_ref = 0;
    for (std::uint32_t r : refs)
        if (r != 0 && (min_ref == 0 || r < min_ref)) min_ref = r;

    if (min_ref == 0) {
        const std::uint32_t cap = cfg.max_label();
        if (state.current_label >= cap) {
            if (cfg.overflow == OverflowPolicy::Error)
                throw LabelOverflowError("label capacity exceeded (" + std::to_string(cap) + ")");
            state.overflowed = true;
            return cap;
        }
        ++state.current_label;
        eq.ensure(state.current_label);
        return state.current_label;
    }

    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i] == 0) continue;
        for (std::size_t j = i + 1; j < refs.size(); ++j) {
            if (refs[j] == 0 || refs[j] == refs[i]) continue;
            eq.unite(refs[i], refs[j]);
            if (pairs_out) pairs_out->emplace_back(refs[i], refs[j]);
        }
    }
    return min_ref;
}

// Raster scan (left to right, top to bottom) applying label_pixel with
// references read from the already-written label grid.
inline FirstPassResult first_pass(const BinaryImage& img, const LabelerConfig& cfg) {
    FirstPassResult out;
    out.labels.width = img.width;
    out.labels.height = img.height;
    out.labels.labels.assign(img.pixels.size(), 0);
    LabelGeneratorState state;

    std::vector<std::uint32_t> refs(cfg.refs.size());
    for (std::uint32_t y = 0; y < img.height; ++y) {
        for (std::uint32_t x = 0; x < img.width; ++x) {
            for (std::size_t k = 0; k < cfg.refs.size(); ++k) {
                const std::int64_t nx = static_cast<std::int64_t>(x) + cfg.refs[k].dx;
                const std::int64_t ny = static_cast<std::int64_t>(y) + cfg.refs[k].dy;
                refs[k] = (nx >= 0 && ny >= 0 && nx < img.width)
                              ? out.labels.labels[static_cast<std::size_t>(ny) * img.width +
                                                  static_cast<std::size_t>(nx)]
                              : 0;
            }
            out.labels.labels[static_cast<std::size_t>(y) * img.width + x] =
                label_pixel(img.at(x, y), refs, state, cfg, out.equivalences, &out.merge_pairs);
        }
    }
    out.labels_issued = state.current_label;
    out.overflowed = state.overflowed;
    return out;
}

// Renumber labels compactly 1..K by first raster appearance; 0 preserved.
inline LabelImage canonicalize(const LabelImage& lbl) {
    LabelImage out;
    out.width = lbl.width;
    out.height = lbl.height;
    out.labels.resize(lbl.labels.size());
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < lbl.labels.size(); ++i) {
        const std::uint32_t v = lbl.labels[i];
        if (v == 0) {
            out.labels[i] = 0;
            continue;
        }
        auto [it, inserted] = remap.try_emplace(v, next + 1);
        if (inserted) ++next;
        out.labels[i] = it->second;
    }
    return out;
}

// Second labeling step: replace provisional labels by their equivalence
// class, then renumber compactly.
inline LabelImage resolve(const FirstPassResult& fp) {
    LabelImage merged;
    merged.width = fp.labels.width;
    merged.height = fp.labels.height;
    merged.labels.resize(fp.labels.labels.size());
    for (std::size_t i = 0; i < fp.labels.labels.size(); ++i) {
        const std::uint32_t v = fp.labels.labels[i];
        merged.labels[i] = v == 0 ? 0 : fp.equivalences.find(v);
    }
    return canonicalize(merged);
}

// Independent BFS oracle: components of white pixels under the symmetrized
// adjacency induced by the ref set (each offset plus its negation).
// Shares no code with first_pass.
inline LabelImage flood_fill_oracle(const BinaryImage& img, const RefSet& ref_set) {
    std::vector<std::pair<int, int>> nbrs;
    for (const auto& r : ref_set) {
        nbrs.emplace_back(r.dx, r.dy);
        nbrs.emplace_back(-r.dx, -r.dy);
    }

    LabelImage out;
    out.width = img.width;
    out.height = img.height;
    out.labels.assign(img.pixels.size(), 0);

    std::uint32_t next_label = 0;
    std::deque<std::pair<std::uint32_t, std::uint32_t>> frontier;
    for (std::uint32_t sy = 0; sy < img.height; ++sy) {
        for (std::uint32_t sx = 0; sx < img.width; ++sx) {
            const std::size_t si = static_cast<std::size_t>(sy) * img.width + sx;
            if (img.pixels[si] == 0 || out.labels[si] != 0) continue;
            ++next_label;
            out.labels[si] = next_label;
            frontier.clear();
            frontier.emplace_back(sx, sy);
            while (!frontier.empty()) {
                auto [x, y] = frontier.front();
                frontier.pop_front();
                for (auto [dx, dy] : nbrs) {
                    const std::int64_t nx = static_cast<std::int64_t>(x) + dx;
                    const std::int64_t ny = static_cast<std::int64_t>(y) + dy;
                    if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * img.width +
                                           static_cast<std::size_t>(nx);
                    if (img.pixels[ni] == 0 || out.labels[ni] != 0) continue;
                    out.labels[ni] = next_label;
                    frontier.emplace_back(static_cast<std::uint32_t>(nx),
                                          static_cast<std::uint32_t>(ny));
                }
            }
        }
    }
    return out;
}

// Number of distinct nonzero labels.
inline std::uint32_t component_count(const LabelImage& lbl) {
    std::uint32_t max_label = 0;
    for (std::uint32_t v : canonicalize(lbl).labels)
        if (v > max_label) max_label = v;
    return max_label;
}

}  // namespace streamlabel

#endif
