#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssag/errors.hpp"

namespace ssag {

// One video: T frames of identical shape plus per-frame class labels.
// Frame payloads are stored as 32-bit floats on disk and in memory so the
// round trip is byte-exact; label 0 is the background class.
struct FrameSequence {
    std::string id;
    std::vector<int> frame_shape; // (features) or (c, h, w)
    std::vector<float> frames;    // T * prod(frame_shape), row-major
    std::vector<int> labels;      // T entries in [0, k)

    int frame_count() const { return static_cast<int>(labels.size()); }
    std::size_t frame_size() const;
    // one frame as doubles, for feeding tensors
    std::vector<double> frame_as_doubles(int t) const;
};

struct DatasetManifest {
    int k = 0;
    std::vector<std::string> class_names; // index 0 = background
    std::vector<int> frame_shape;

    struct Entry {
        std::string id;
        std::string split; // train | val | test
    };
    std::vector<Entry> videos;

    std::vector<std::string> ids_for_split(const std::string& split) const;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<FrameSequence> videos;

    const FrameSequence& video(const std::string& id) const;
};

// Markov-walk synthetic generator. Frames are class mean + gaussian noise;
// optional background insertions between segments; with history_dependence
// the last two action classes share one emission distribution and are
// distinguishable only through the class that precedes them.
struct SynthSpec {
    int classes = 5;       // action classes; k = classes + 1 with background
    int feature_dim = 16;
    double separation = 3.5; // distance scale between class means
    double noise = 1.0;      // emission noise sigma
    std::vector<std::vector<double>> transitions; // classes x classes; empty = default
    double background_prob = 0.3;
    int bg_min = 2;
    int bg_max = 8;
    int seg_min = 10;
    int seg_max = 40;
    bool history_dependence = false;
    std::uint64_t seed = 7;

    void validate() const;
    int k() const { return classes + 1; }
};

// default transition matrix; with history_dependence the aliased pair is
// (classes-1, classes) and each aliased class follows exactly one cue class
std::vector<std::vector<double>> default_transitions(const SynthSpec& spec);

Dataset synth_generate(const SynthSpec& spec, int n_videos, int frames_per_video, int n_test_videos);

void write_dataset(const std::string& dir, const Dataset& data);
Dataset read_dataset(const std::string& dir);

void write_frames_file(const std::string& path, const FrameSequence& seq);
void read_frames_file(const std::string& path, FrameSequence& seq);

struct Prediction {
    std::vector<int> labels;
    std::vector<double> probs; // T x k row-major, rows sum to 1
    std::vector<double> codes; // T x k generated codes, internal form; may be empty
    int k = 0;
};

void write_predictions(const std::string& path, const Prediction& pred);
Prediction read_predictions(const std::string& path);

// generated action codes as length-k rows of unsigned bytes, one frame per line
void write_codes(const std::string& path, const Prediction& pred);

// class means used by the generator, exposed for analysis tools and tests
std::vector<std::vector<double>> synth_class_means(const SynthSpec& spec);

} // namespace ssag
