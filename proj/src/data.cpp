#include "tvnet/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tvnet::data {

using nlohmann::json;

namespace {

json annotation_to_json(const AnnotationSet& ann) {
    json j;
    j["duration"] = ann.duration;
    j["annotations"] = json::array();
    for (const auto& inst : ann.instances)
        j["annotations"].push_back({{"segment", {inst.start, inst.end}}, {"label", inst.label}});
    j["video_classes"] = json::array();
    for (const auto& vc : ann.video_level_classes)
        j["video_classes"].push_back({{"label", vc.label}, {"score", vc.score}});
    return j;
}

}  // namespace

std::map<std::string, AnnotationSet> load_annotations(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "annotations: cannot open " + path);
    json root;
    try {
        is >> root;
    } catch (const json::exception& e) {
        throw std::runtime_error("annotations: malformed JSON in " + path + ": " + e.what());
    }
    require(root.is_object(), "annotations: top level of " + path + " must be an object");

    std::map<std::string, AnnotationSet> out;
    for (auto it = root.begin(); it != root.end(); ++it) {
        const std::string& vid = it.key();
        const json& jv = it.value();
        AnnotationSet ann;
        ann.video_id = vid;
        try {
            ann.duration = jv.at("duration").get<double>();
            require(ann.duration > 0, "non-positive duration");
            for (const auto& ja : jv.value("annotations", json::array())) {
                ActionInstance inst;
                const auto& seg = ja.at("segment");
                inst.start = seg.at(0).get<double>();
                inst.end = seg.at(1).get<double>();
                inst.label = ja.at("label").get<std::string>();
                require(std::isfinite(inst.start) && std::isfinite(inst.end),
                        "non-finite segment");
                if (inst.start >= inst.end) {
                    log_warn("annotations: " + vid + ": skipping instance with start >= end [" +
                             std::to_string(inst.start) + ", " + std::to_string(inst.end) + "]");
                    continue;
                }
                if (inst.start < 0) {
                    log_warn("annotations: " + vid + ": clamping negative start to 0");
                    inst.start = 0;
                }
                if (inst.end > ann.duration) {
                    log_warn("annotations: " + vid + ": clamping end " + std::to_string(inst.end) +
                             " to duration " + std::to_string(ann.duration));
                    inst.end = ann.duration;
                    if (inst.start >= inst.end) continue;
                }
                ann.instances.push_back(std::move(inst));
            }
            for (const auto& jc : jv.value("video_classes", json::array())) {
                ClassScore vc;
                vc.label = jc.at("label").get<std::string>();
                vc.score = jc.at("score").get<double>();
                ann.video_level_classes.push_back(std::move(vc));
            }
        } catch (const json::exception& e) {
            throw std::runtime_error("annotations: " + path + ": video '" + vid + "': " + e.what());
        }
        std::stable_sort(ann.video_level_classes.begin(), ann.video_level_classes.end(),
                         [](const ClassScore& a, const ClassScore& b) { return a.score > b.score; });
        out.emplace(vid, std::move(ann));
    }
    return out;
}

void save_annotations(const std::string& path, const std::map<std::string, AnnotationSet>& sets) {
    json root = json::object();
    for (const auto& [vid, ann] : sets) root[vid] = annotation_to_json(ann);
    std::ofstream os(path);
    require(bool(os), "annotations: cannot open " + path + " for writing");
    os << root.dump(1) << "\n";
}

namespace {

constexpr char kFeatureMagic[4] = {'T', 'V', 'N', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

std::uint32_t read_u32le(std::istream& is, const std::string& ctx) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    require(bool(is), "features: truncated file (" + ctx + ")");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::string stem_of(const std::string& path) {
    auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

FeatureSequence load_features(const std::string& path, int expected_t, int expected_c,
                              bool allow_rescale) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "features: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(bool(is) && std::memcmp(magic, kFeatureMagic, 4) == 0,
            "features: " + path + " is not a TVNF file");
    std::uint32_t version = read_u32le(is, "version");
    require(version == kFeatureVersion, "features: unsupported version");
    int t = static_cast<int>(read_u32le(is, "T"));
    int c = static_cast<int>(read_u32le(is, "C"));
    require(t >= 1 && c >= 1, "features: bad dimensions in " + path);
    require(c == expected_c, "features: " + path + " has C=" + std::to_string(c) +
                                 ", expected C=" + std::to_string(expected_c));

    FeatureSequence seq;
    seq.video_id = stem_of(path);
    seq.T = t;
    seq.C = c;
    seq.values.resize(static_cast<std::size_t>(t) * c);
    std::vector<float> raw(seq.values.size());
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    require(bool(is), "features: truncated data in " + path);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        require(std::isfinite(raw[i]), "features: non-finite value in " + path + " at element " +
                                           std::to_string(i));
        seq.values[i] = static_cast<real>(raw[i]);
    }

    if (t != expected_t) {
        require(allow_rescale, "features: " + path + " has T=" + std::to_string(t) +
                                   ", expected T=" + std::to_string(expected_t) +
                                   " (enable rescaling to accept)");
        seq = rescale_sequence(seq, expected_t);
        log_info("features: rescaled " + path + " from T=" + std::to_string(t) + " to T=" +
                 std::to_string(expected_t));
    }
    return seq;
}

void save_features(const std::string& path, const FeatureSequence& seq) {
    std::ofstream os(path, std::ios::binary);
    require(bool(os), "features: cannot open " + path + " for writing");
    os.write(kFeatureMagic, 4);
    write_u32le(os, kFeatureVersion);
    write_u32le(os, static_cast<std::uint32_t>(seq.T));
    write_u32le(os, static_cast<std::uint32_t>(seq.C));
    std::vector<float> raw(seq.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<float>(seq.values[i]);
    os.write(reinterpret_cast<const char*>(raw.data()),
             static_cast<std::streamsize>(raw.size() * sizeof(float)));
    require(bool(os), "features: write failed for " + path);
}

FeatureSequence load_features_csv(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "features: cannot open " + path);
    FeatureSequence seq;
    seq.video_id = stem_of(path);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            double v;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw std::runtime_error("features: " + path + ":" + std::to_string(line_no) +
                                         ": bad number '" + cell + "'");
            }
            require(std::isfinite(v), "features: non-finite value at " + path + ":" +
                                          std::to_string(line_no));
            seq.values.push_back(static_cast<real>(v));
            ++c;
        }
        if (seq.C == 0) seq.C = c;
        require(c == seq.C, "features: " + path + ":" + std::to_string(line_no) +
                                ": expected " + std::to_string(seq.C) + " columns, got " +
                                std::to_string(c));
        ++seq.T;
    }
    require(seq.T >= 1, "features: " + path + " is empty");
    return seq;
}

FeatureSequence rescale_sequence(const FeatureSequence& seq, int target_t) {
    require(seq.T >= 2, "rescale: source sequence must have T >= 2");
    require(target_t >= 2, "rescale: target length must be >= 2");
    if (target_t == seq.T) return seq;

    FeatureSequence out;
    out.video_id = seq.video_id;
    out.T = target_t;
    out.C = seq.C;
    out.values.resize(static_cast<std::size_t>(target_t) * seq.C);
    // Uniform resample including both endpoints.
    double step = static_cast<double>(seq.T - 1) / static_cast<double>(target_t - 1);
    for (int t = 0; t < target_t; ++t) {
        double pos = t * step;
        int lo = static_cast<int>(pos);
        if (lo >= seq.T - 1) lo = seq.T - 2;
        double frac = pos - lo;
        for (int c = 0; c < seq.C; ++c)
            out.at(t, c) = static_cast<real>((1.0 - frac) * seq.at(lo, c) + frac * seq.at(lo + 1, c));
    }
    out.frame_rate_ratio = seq.frame_rate_ratio * static_cast<double>(seq.T) / target_t;
    return out;
}

void save_predictions(const std::string& path, const std::map<std::string, PredictionSet>& preds) {
    std::ofstream os(path);
    require(bool(os), "predictions: cannot open " + path + " for writing");
    os << predictions_to_json(preds) << "\n";
}

std::string predictions_to_json(const std::map<std::string, PredictionSet>& preds) {
    json root = json::object();
    for (const auto& [vid, ps] : preds) {
        json arr = json::array();
        for (const auto& p : ps.proposals)
            arr.push_back({{"segment", {p.start, p.end}}, {"score", p.score}, {"label", p.label}});
        root[vid] = std::move(arr);
    }
    return root.dump(1);
}

std::map<std::string, PredictionSet> load_predictions(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "predictions: cannot open " + path);
    json root;
    try {
        is >> root;
    } catch (const json::exception& e) {
        throw std::runtime_error("predictions: malformed JSON in " + path + ": " + e.what());
    }
    std::map<std::string, PredictionSet> out;
    for (auto it = root.begin(); it != root.end(); ++it) {
        PredictionSet ps;
        ps.video_id = it.key();
        for (const auto& jp : it.value()) {
            Prediction p;
            p.start = jp.at("segment").at(0).get<double>();
            p.end = jp.at("segment").at(1).get<double>();
            p.score = jp.at("score").get<double>();
            p.label = jp.at("label").get<std::string>();
            require(p.start < p.end, "predictions: start >= end in " + ps.video_id);
            require(p.score >= 0, "predictions: negative score in " + ps.video_id);
            ps.proposals.push_back(std::move(p));
        }
        std::stable_sort(ps.proposals.begin(), ps.proposals.end(),
                         [](const Prediction& a, const Prediction& b) { return a.score > b.score; });
        out.emplace(it.key(), std::move(ps));
    }
    return out;
}

}  // namespace tvnet::data
