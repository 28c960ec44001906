#include "ricenet/metrics.hpp"

#include <cmath>
#include <string>

#include "ricenet/errors.hpp"

namespace ricenet {

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> preds)
{
    if (labels.size() != preds.size()) {
        throw SizeMismatchError("confusion: " + std::to_string(labels.size()) + " labels vs " +
                                std::to_string(preds.size()) + " predictions");
    }
    if (labels.empty()) {
        throw PreconditionError("confusion: empty input");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if ((labels[i] != 0 && labels[i] != 1) || (preds[i] != 0 && preds[i] != 1)) {
            throw PreconditionError("confusion: class values must be 0 or 1");
        }
        ++cm.counts[labels[i]][preds[i]];
    }
    return cm;
}

double class_f1(const ConfusionMatrix& cm, int cls)
{
    const int other = 1 - cls;
    const double tp = static_cast<double>(cm.counts[cls][cls]);
    const double fp = static_cast<double>(cm.counts[other][cls]);
    const double fn = static_cast<double>(cm.counts[cls][other]);
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double macro_f1(const ConfusionMatrix& cm)
{
    return 0.5 * (class_f1(cm, 0) + class_f1(cm, 1));
}

double macro_f1(std::span<const int> labels, std::span<const int> preds)
{
    return macro_f1(confusion(labels, preds));
}

int predict_label(double p_rice) noexcept
{
    return p_rice > 0.5 ? 1 : 0;
}

std::vector<int> majority_vote(const std::vector<std::vector<int>>& votes, const std::vector<std::vector<double>>& probs)
{
    if (votes.empty()) {
        throw PreconditionError("majority_vote: no models");
    }
    const std::size_t n = votes.front().size();
    for (const auto& v : votes) {
        if (v.size() != n) {
            throw SizeMismatchError("majority_vote: models disagree on subject count");
        }
    }
    const bool have_probs = probs.size() == votes.size();
    std::vector<int> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t rice = 0;
        for (const auto& v : votes) {
            rice += v[s] == 1 ? 1 : 0;
        }
        const std::size_t rec = votes.size() - rice;
        if (rice != rec) {
            out[s] = rice > rec ? 1 : 0;
            continue;
        }
        if (!have_probs) {
            throw PreconditionError("majority_vote: tied vote needs probabilities");
        }
        double sum = 0.0;
        for (const auto& p : probs) {
            sum += p.at(s);
        }
        out[s] = predict_label(sum / static_cast<double>(probs.size()));
    }
    return out;
}

double mean_of(std::span<const double> v)
{
    if (v.empty()) {
        throw PreconditionError("mean_of: empty input");
    }
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v)
{
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace ricenet
