#include "tvnet/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace tvnet::eval {

double temporal_iou(double a_start, double a_end, double b_start, double b_end) {
    if (a_end <= a_start || b_end <= b_start) return 0.0;
    double inter = std::min(a_end, b_end) - std::max(a_start, b_start);
    if (inter <= 0) return 0.0;
    double uni = std::max(a_end, b_end) - std::min(a_start, b_start);
    return inter / uni;
}

namespace {

struct FlatPrediction {
    double score;
    double start, end;
    const std::string* video;
};

struct GtInstance {
    double start, end;
    bool matched = false;
};

// AP at one threshold for one class, all-point interpolation.
double class_ap(std::vector<FlatPrediction>& preds,
                std::map<std::string, std::vector<GtInstance>>& gt, int total_gt,
                double threshold) {
    for (auto& [vid, insts] : gt)
        for (auto& g : insts) g.matched = false;

    std::vector<int> tp(preds.size(), 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto it = gt.find(*preds[i].video);
        if (it == gt.end()) continue;
        double best_iou = 0;
        GtInstance* best = nullptr;
        for (auto& g : it->second) {
            if (g.matched) continue;
            double iou = temporal_iou(preds[i].start, preds[i].end, g.start, g.end);
            if (iou >= threshold && iou > best_iou) {
                best_iou = iou;
                best = &g;
            }
        }
        if (best) {
            best->matched = true;
            tp[i] = 1;
        }
    }

    // Precision envelope over the recall axis.
    std::vector<double> precision(preds.size()), recall(preds.size());
    int cum_tp = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        cum_tp += tp[i];
        precision[i] = static_cast<double>(cum_tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(cum_tp) / total_gt;
    }
    for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
        precision[i] = std::max(precision[i], precision[i + 1]);

    double ap = 0;
    double prev_recall = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

}  // namespace

EvalReport compute_map(const std::map<std::string, data::PredictionSet>& predictions,
                       const std::map<std::string, data::AnnotationSet>& annotations,
                       const std::vector<double>& thresholds) {
    EvalReport report;

    // Evaluate requested thresholds plus the ten canonical ones.
    std::vector<double> all_thr = thresholds;
    for (double t : average_map_thresholds()) all_thr.push_back(t);
    std::sort(all_thr.begin(), all_thr.end());
    all_thr.erase(std::unique(all_thr.begin(), all_thr.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                  all_thr.end());

    std::set<std::string> classes;
    std::map<std::string, std::map<std::string, std::vector<GtInstance>>> gt_by_class;
    std::map<std::string, int> gt_count;
    int total_gt = 0;
    for (const auto& [vid, ann] : annotations) {
        for (const auto& inst : ann.instances) {
            classes.insert(inst.label);
            gt_by_class[inst.label][vid].push_back({inst.start, inst.end, false});
            ++gt_count[inst.label];
            ++total_gt;
        }
    }

    std::map<std::string, std::vector<FlatPrediction>> preds_by_class;
    int total_preds = 0;
    for (const auto& [vid, ps] : predictions) {
        for (const auto& p : ps.proposals) {
            preds_by_class[p.label].push_back({p.score, p.start, p.end, &ps.video_id});
            ++total_preds;
        }
    }
    for (auto& [cls, plist] : preds_by_class)
        std::stable_sort(plist.begin(), plist.end(),
                         [](const FlatPrediction& a, const FlatPrediction& b) {
                             return a.score > b.score;
                         });

    report.num_predictions = total_preds;
    report.num_ground_truth = total_gt;
    if (total_gt == 0) {
        report.empty = true;
        report.thresholds = thresholds;
        report.map_per_threshold.assign(thresholds.size(),
                                        std::numeric_limits<double>::quiet_NaN());
        report.average_map = std::numeric_limits<double>::quiet_NaN();
        log_warn("compute_map: no ground truth instances; mAP is undefined");
        return report;
    }

    std::map<std::string, std::vector<double>> ap_all;  // class -> AP per all_thr entry
    std::vector<double> map_all(all_thr.size(), 0.0);
    static const std::vector<FlatPrediction> no_preds;
    for (const auto& cls : classes) {
        auto pit = preds_by_class.find(cls);
        std::vector<FlatPrediction> plist = pit == preds_by_class.end() ? no_preds : pit->second;
        auto& gts = gt_by_class[cls];
        std::vector<double> aps;
        for (double thr : all_thr) aps.push_back(class_ap(plist, gts, gt_count[cls], thr));
        ap_all[cls] = std::move(aps);
    }
    for (std::size_t i = 0; i < all_thr.size(); ++i) {
        double acc = 0;
        for (const auto& cls : classes) acc += ap_all[cls][i];
        map_all[i] = acc / static_cast<double>(classes.size());
    }

    auto index_of = [&](double thr) {
        for (std::size_t i = 0; i < all_thr.size(); ++i)
            if (std::abs(all_thr[i] - thr) < 1e-12) return i;
        return all_thr.size();  // unreachable
    };

    report.thresholds = thresholds;
    for (double thr : thresholds) report.map_per_threshold.push_back(map_all[index_of(thr)]);
    for (const auto& cls : classes) {
        std::vector<double> aps;
        for (double thr : thresholds) aps.push_back(ap_all[cls][index_of(thr)]);
        report.ap[cls] = std::move(aps);
    }
    double avg = 0;
    for (double thr : average_map_thresholds()) avg += map_all[index_of(thr)];
    report.average_map = avg / 10.0;
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["thresholds"] = thresholds;
    j["empty"] = empty;
    j["num_predictions"] = num_predictions;
    j["num_ground_truth"] = num_ground_truth;
    if (empty) {
        j["map"] = nullptr;
        j["average_map"] = nullptr;
        return j.dump(1);
    }
    j["map"] = map_per_threshold;
    j["average_map"] = average_map;
    for (const auto& [cls, aps] : ap) j["ap_per_class"][cls] = aps;
    return j.dump(1);
}

std::string EvalReport::to_csv(const std::string& row_name) const {
    std::ostringstream os;
    os << "config";
    for (double t : thresholds) os << ",mAP@" << t;
    os << ",average_mAP\n" << row_name;
    os.setf(std::ios::fixed);
    os.precision(4);
    for (double v : map_per_threshold) os << "," << v;
    os << "," << average_map << "\n";
    return os.str();
}

}  // namespace tvnet::eval
