#include "ssag/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ssag/rng.hpp"

namespace fs = std::filesystem;

namespace ssag {

std::size_t FrameSequence::frame_size() const {
    std::size_t n = 1;
    for (int d : frame_shape) n *= static_cast<std::size_t>(d);
    return n;
}

std::vector<double> FrameSequence::frame_as_doubles(int t) const {
    const std::size_t fs = frame_size();
    std::vector<double> out(fs);
    const float* src = frames.data() + static_cast<std::size_t>(t) * fs;
    for (std::size_t i = 0; i < fs; ++i) out[i] = static_cast<double>(src[i]);
    return out;
}

std::vector<std::string> DatasetManifest::ids_for_split(const std::string& split) const {
    std::vector<std::string> out;
    for (const Entry& e : videos)
        if (e.split == split) out.push_back(e.id);
    return out;
}

const FrameSequence& Dataset::video(const std::string& id) const {
    for (const FrameSequence& v : videos)
        if (v.id == id) return v;
    throw validation_error("dataset: no video with id '" + id + "'");
}

void SynthSpec::validate() const {
    if (classes < 1) throw config_error("synth: need at least one action class");
    if (feature_dim < 1) throw config_error("synth: feature dimension must be positive");
    if (noise < 0.0) throw config_error("synth: noise must be non-negative");
    if (seg_min < 1 || seg_max < seg_min) throw config_error("synth: bad segment duration range");
    if (bg_min < 1 || bg_max < bg_min) throw config_error("synth: bad background duration range");
    if (background_prob < 0.0 || background_prob > 1.0) throw config_error("synth: background probability outside [0,1]");
    if (history_dependence && classes < 4)
        throw config_error("synth: history dependence needs at least 4 action classes (two cues, two aliased)");
    if (!transitions.empty()) {
        if (static_cast<int>(transitions.size()) != classes)
            throw config_error("synth: transition matrix must have one row per action class");
        for (const auto& row : transitions) {
            if (static_cast<int>(row.size()) != classes)
                throw config_error("synth: transition matrix must be square");
            double s = 0.0;
            for (double p : row) {
                if (p < 0.0) throw config_error("synth: negative transition probability");
                s += p;
            }
            if (std::fabs(s - 1.0) > 1e-9) throw config_error("synth: transition matrix rows must sum to 1");
        }
    }
}

std::vector<std::vector<double>> default_transitions(const SynthSpec& spec) {
    const int n = spec.classes;
    std::vector<std::vector<double>> tm(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n), 0.0));
    if (!spec.history_dependence) {
        // uniform over the other classes
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) tm[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1.0 / (n - 1);
        return tm;
    }
    // action classes are 1-based labels; matrix indices are 0-based.
    // cue0 -> aliased0 and cue1 -> aliased1 are the only entries into the
    // aliased pair, so the preceding class fully determines which aliased
    // class can occur.
    const int a1 = n - 2, a2 = n - 1; // aliased pair (indices)
    const int c1 = 0, c2 = 1;         // cue classes
    for (int i = 0; i < n; ++i) {
        auto& row = tm[static_cast<std::size_t>(i)];
        double remainder = 1.0;
        if (i == c1) {
            row[static_cast<std::size_t>(a1)] = 0.6;
            remainder = 0.4;
        } else if (i == c2) {
            row[static_cast<std::size_t>(a2)] = 0.6;
            remainder = 0.4;
        } else {
            row[static_cast<std::size_t>(c1)] = 0.3;
            row[static_cast<std::size_t>(c2)] = 0.3;
            remainder = 0.4;
        }
        std::vector<int> neutral; // neither cue nor aliased nor self
        for (int j = 2; j < n - 2; ++j)
            if (j != i) neutral.push_back(j);
        if (neutral.empty()) {
            row[static_cast<std::size_t>(c1)] += remainder / 2.0;
            row[static_cast<std::size_t>(c2)] += remainder / 2.0;
        } else {
            for (int j : neutral) row[static_cast<std::size_t>(j)] += remainder / static_cast<double>(neutral.size());
        }
    }
    return tm;
}

std::vector<std::vector<double>> synth_class_means(const SynthSpec& spec) {
    // background (index 0) sits at the origin; action classes get random
    // directions scaled by the separation. The aliased pair shares one mean.
    Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.k()),
                                           std::vector<double>(static_cast<std::size_t>(spec.feature_dim), 0.0));
    for (int c = 1; c <= spec.classes; ++c) {
        double norm = 0.0;
        auto& mu = means[static_cast<std::size_t>(c)];
        for (double& v : mu) {
            v = rng.gaussian();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : mu) v = v / norm * spec.separation;
    }
    if (spec.history_dependence) means[static_cast<std::size_t>(spec.classes)] = means[static_cast<std::size_t>(spec.classes - 1)];
    return means;
}

Dataset synth_generate(const SynthSpec& spec, int n_videos, int frames_per_video, int n_test_videos) {
    spec.validate();
    if (n_videos < 1 || frames_per_video < 1) throw config_error("synth: need at least one video and one frame");
    if (n_test_videos < 0 || n_test_videos >= n_videos)
        throw config_error("synth: test video count must be in [0, n_videos)");

    const auto tm = spec.transitions.empty() ? default_transitions(spec) : spec.transitions;
    {
        SynthSpec checked = spec;
        checked.transitions = tm;
        checked.validate();
    }
    const auto means = synth_class_means(spec);
    Rng rng(spec.seed);

    Dataset ds;
    ds.manifest.k = spec.k();
    ds.manifest.frame_shape = {spec.feature_dim};
    ds.manifest.class_names.push_back("background");
    for (int c = 1; c <= spec.classes; ++c) ds.manifest.class_names.push_back("action_" + std::to_string(c));

    for (int v = 0; v < n_videos; ++v) {
        FrameSequence seq;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "video_%03d", v);
        seq.id = buf;
        seq.frame_shape = ds.manifest.frame_shape;

        int cls = rng.uniform_int(1, 2); // start from a cue class when history matters
        if (!spec.history_dependence) cls = rng.uniform_int(1, spec.classes);
        std::vector<int> labels;
        labels.reserve(static_cast<std::size_t>(frames_per_video));
        while (static_cast<int>(labels.size()) < frames_per_video) {
            const int dur = rng.uniform_int(spec.seg_min, spec.seg_max);
            for (int t = 0; t < dur && static_cast<int>(labels.size()) < frames_per_video; ++t) labels.push_back(cls);
            if (static_cast<int>(labels.size()) >= frames_per_video) break;
            if (rng.uniform() < spec.background_prob) {
                const int bg_dur = rng.uniform_int(spec.bg_min, spec.bg_max);
                for (int t = 0; t < bg_dur && static_cast<int>(labels.size()) < frames_per_video; ++t)
                    labels.push_back(0);
            }
            cls = rng.sample_categorical(tm[static_cast<std::size_t>(cls - 1)]) + 1;
        }

        seq.labels = labels;
        seq.frames.resize(labels.size() * static_cast<std::size_t>(spec.feature_dim));
        for (std::size_t t = 0; t < labels.size(); ++t) {
            const auto& mu = means[static_cast<std::size_t>(labels[t])];
            for (int j = 0; j < spec.feature_dim; ++j) {
                const double val = mu[static_cast<std::size_t>(j)] + spec.noise * rng.gaussian();
                // quantize to f32 here so the on-disk round trip is exact
                seq.frames[t * static_cast<std::size_t>(spec.feature_dim) + static_cast<std::size_t>(j)] =
                    static_cast<float>(val);
            }
        }

        ds.manifest.videos.push_back({seq.id, v < n_videos - n_test_videos ? "train" : "test"});
        ds.videos.push_back(std::move(seq));
    }
    return ds;
}

namespace {

void write_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& is, const std::string& path) {
    unsigned char b[4];
    const auto off = is.tellg();
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is)
        throw format_error(path + ": unexpected end of file at offset " + std::to_string(static_cast<long long>(off)));
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_frames_file(const std::string& path, const FrameSequence& seq) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error(path + ": cannot open for writing");
    os.write("SSAG", 4);
    write_u32(os, 1u); // version
    write_u32(os, static_cast<std::uint32_t>(seq.frame_count()));
    write_u32(os, static_cast<std::uint32_t>(seq.frame_shape.size()));
    for (int d : seq.frame_shape) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(seq.frames.data()),
             static_cast<std::streamsize>(seq.frames.size() * sizeof(float)));
    if (!os) throw format_error(path + ": write failed");
}

void read_frames_file(const std::string& path, FrameSequence& seq) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error(path + ": cannot open");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SSAG", 4) != 0)
        throw format_error(path + ": bad magic at offset 0, expected 'SSAG'");
    const std::uint32_t version = read_u32(is, path);
    if (version != 1u)
        throw format_error(path + ": unsupported version " + std::to_string(version) + " at offset 4");
    const std::uint32_t t = read_u32(is, path);
    const std::uint32_t rank = read_u32(is, path);
    if (rank != 1 && rank != 3)
        throw format_error(path + ": frame rank must be 1 or 3, got " + std::to_string(rank) + " at offset 12");
    seq.frame_shape.clear();
    std::size_t fsz = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint32_t d = read_u32(is, path);
        if (d == 0) throw format_error(path + ": zero dimension in frame shape");
        seq.frame_shape.push_back(static_cast<int>(d));
        fsz *= d;
    }
    seq.frames.assign(static_cast<std::size_t>(t) * fsz, 0.0f);
    const auto payload_off = is.tellg();
    is.read(reinterpret_cast<char*>(seq.frames.data()),
            static_cast<std::streamsize>(seq.frames.size() * sizeof(float)));
    if (!is)
        throw format_error(path + ": truncated frame payload at offset " +
                           std::to_string(static_cast<long long>(payload_off) + is.gcount()));
    char extra;
    if (is.read(&extra, 1))
        throw format_error(path + ": trailing bytes after " + std::to_string(t) + " frames");
}

namespace {

std::vector<int> read_labels_file(const std::string& path, int k) {
    std::ifstream is(path);
    if (!is) throw format_error(path + ": cannot open");
    std::vector<int> labels;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        int v = 0;
        try {
            std::size_t pos = 0;
            v = std::stoi(line, &pos);
            if (pos != line.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw validation_error(path + ":" + std::to_string(line_no) + ": not an integer label: '" + line + "'");
        }
        if (v < 0 || v >= k)
            throw validation_error(path + ":" + std::to_string(line_no) + ": label " + std::to_string(v) +
                                   " out of range for k=" + std::to_string(k));
        labels.push_back(v);
    }
    return labels;
}

void write_labels_file(const std::string& path, const std::vector<int>& labels) {
    std::ofstream os(path);
    if (!os) throw format_error(path + ": cannot open for writing");
    for (int v : labels) os << v << "\n";
}

} // namespace

void write_dataset(const std::string& dir, const Dataset& data) {
    fs::create_directories(dir);
    {
        std::ofstream os(dir + "/classes.txt");
        if (!os) throw format_error(dir + "/classes.txt: cannot open for writing");
        for (const std::string& name : data.manifest.class_names) os << name << "\n";
    }
    {
        std::ofstream os(dir + "/manifest.txt");
        if (!os) throw format_error(dir + "/manifest.txt: cannot open for writing");
        os << "k=" << data.manifest.k << "\n";
        os << "frame_shape=";
        for (std::size_t i = 0; i < data.manifest.frame_shape.size(); ++i) {
            if (i) os << "x";
            os << data.manifest.frame_shape[i];
        }
        os << "\n";
        for (const auto& e : data.manifest.videos) os << "video=" << e.id << ":" << e.split << "\n";
    }
    for (const FrameSequence& seq : data.videos) {
        write_frames_file(dir + "/" + seq.id + ".frames.bin", seq);
        write_labels_file(dir + "/" + seq.id + ".labels.txt", seq.labels);
    }
}

Dataset read_dataset(const std::string& dir) {
    Dataset ds;
    const std::string mpath = dir + "/manifest.txt";
    std::ifstream is(mpath);
    if (!is) throw format_error(mpath + ": cannot open");
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error(mpath + ":" + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "k") {
            ds.manifest.k = std::stoi(val);
        } else if (key == "frame_shape") {
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, 'x')) ds.manifest.frame_shape.push_back(std::stoi(tok));
        } else if (key == "video") {
            const auto colon = val.find(':');
            if (colon == std::string::npos)
                throw validation_error(mpath + ":" + std::to_string(line_no) + ": expected video=<id>:<split>");
            ds.manifest.videos.push_back({val.substr(0, colon), val.substr(colon + 1)});
        } else {
            throw validation_error(mpath + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (ds.manifest.k < 2) throw validation_error(mpath + ": missing or invalid k");
    if (ds.manifest.frame_shape.empty()) throw validation_error(mpath + ": missing frame_shape");

    {
        std::set<std::string> seen;
        for (const auto& e : ds.manifest.videos) {
            if (!seen.insert(e.id).second)
                throw validation_error(mpath + ": video '" + e.id + "' listed in more than one split");
            if (e.split != "train" && e.split != "val" && e.split != "test")
                throw validation_error(mpath + ": unknown split '" + e.split + "' for video '" + e.id + "'");
        }
    }

    {
        const std::string cpath = dir + "/classes.txt";
        std::ifstream cs(cpath);
        if (!cs) throw format_error(cpath + ": cannot open");
        std::string cname;
        while (std::getline(cs, cname))
            if (!cname.empty()) ds.manifest.class_names.push_back(cname);
        if (static_cast<int>(ds.manifest.class_names.size()) != ds.manifest.k)
            throw validation_error(cpath + ": " + std::to_string(ds.manifest.class_names.size()) +
                                   " class names for k=" + std::to_string(ds.manifest.k));
        if (ds.manifest.class_names[0] != "background")
            throw validation_error(cpath + ":1: first class must be 'background'");
    }

    for (const auto& e : ds.manifest.videos) {
        FrameSequence seq;
        seq.id = e.id;
        read_frames_file(dir + "/" + e.id + ".frames.bin", seq);
        if (seq.frame_shape != ds.manifest.frame_shape)
            throw validation_error(dir + "/" + e.id + ".frames.bin: frame shape differs from manifest");
        seq.labels = read_labels_file(dir + "/" + e.id + ".labels.txt", ds.manifest.k);
        const std::size_t expect = seq.labels.size() * seq.frame_size();
        if (seq.frames.size() != expect)
            throw validation_error(dir + "/" + e.id + ": " + std::to_string(seq.labels.size()) + " labels vs " +
                                   std::to_string(seq.frames.size() / seq.frame_size()) + " frames");
        ds.videos.push_back(std::move(seq));
    }
    return ds;
}

void write_predictions(const std::string& path, const Prediction& pred) {
    if (pred.probs.size() != pred.labels.size() * static_cast<std::size_t>(pred.k))
        throw contract_error("predictions: probability table size mismatch");
    for (std::size_t t = 0; t < pred.labels.size(); ++t) {
        double s = 0.0;
        for (int j = 0; j < pred.k; ++j) s += pred.probs[t * static_cast<std::size_t>(pred.k) + static_cast<std::size_t>(j)];
        if (std::fabs(s - 1.0) > 1e-6)
            throw validation_error(path + ": probability row " + std::to_string(t) + " sums to " + std::to_string(s));
    }
    std::ofstream os(path);
    if (!os) throw format_error(path + ": cannot open for writing");
    char buf[64];
    for (std::size_t t = 0; t < pred.labels.size(); ++t) {
        os << t << "," << pred.labels[t];
        for (int j = 0; j < pred.k; ++j) {
            // %.17g round-trips doubles exactly, so metrics from a reloaded
            // file match the in-memory ones bit for bit
            std::snprintf(buf, sizeof(buf), "%.17g", pred.probs[t * static_cast<std::size_t>(pred.k) + static_cast<std::size_t>(j)]);
            os << "," << buf;
        }
        os << "\n";
    }
}

void write_codes(const std::string& path, const Prediction& pred) {
    if (pred.codes.size() != pred.labels.size() * static_cast<std::size_t>(pred.k))
        throw contract_error("codes: no generated codes stored in this prediction");
    std::ofstream os(path);
    if (!os) throw format_error(path + ": cannot open for writing");
    for (std::size_t t = 0; t < pred.labels.size(); ++t) {
        os << t;
        for (int j = 0; j < pred.k; ++j) {
            const double v = pred.codes[t * static_cast<std::size_t>(pred.k) + static_cast<std::size_t>(j)];
            const int byte = static_cast<int>(std::clamp(std::round(v * 255.0), 0.0, 255.0));
            os << "," << byte;
        }
        os << "\n";
    }
}

Prediction read_predictions(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw format_error(path + ": cannot open");
    Prediction pred;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() < 3)
            throw validation_error(path + ":" + std::to_string(line_no) + ": expected frame,label,probs...");
        const int k_here = static_cast<int>(cols.size()) - 2;
        if (pred.k == 0) pred.k = k_here;
        if (k_here != pred.k)
            throw validation_error(path + ":" + std::to_string(line_no) + ": inconsistent column count");
        const long frame_idx = std::stol(cols[0]);
        if (frame_idx != static_cast<long>(pred.labels.size()))
            throw validation_error(path + ":" + std::to_string(line_no) + ": frame index " + cols[0] +
                                   " out of order");
        pred.labels.push_back(std::stoi(cols[1]));
        double s = 0.0;
        for (int j = 0; j < pred.k; ++j) {
            const double p = std::stod(cols[static_cast<std::size_t>(j) + 2]);
            pred.probs.push_back(p);
            s += p;
        }
        if (std::fabs(s - 1.0) > 1e-6)
            throw validation_error(path + ":" + std::to_string(line_no) + ": probability row sums to " +
                                   std::to_string(s));
        if (pred.labels.back() < 0 || pred.labels.back() >= pred.k)
            throw validation_error(path + ":" + std::to_string(line_no) + ": label out of range");
    }
    return pred;
}

} // namespace ssag
