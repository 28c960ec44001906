#pragma once

#include <array>
#include <span>
#include <vector>

namespace ricenet {

// counts[true][pred], classes 0 = RECURRENCE, 1 = RICE.
struct ConfusionMatrix {
    std::array<std::array<long, 2>, 2> counts{};

    long total() const noexcept { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> preds);

// Per-class F1 with any 0/0 ratio taken as 0.
double class_f1(const ConfusionMatrix& cm, int cls);
// Unweighted mean of the two class F1 scores.
double macro_f1(const ConfusionMatrix& cm);
double macro_f1(std::span<const int> labels, std::span<const int> preds);

// p(RICE) > 0.5 -> RICE.
int predict_label(double p_rice) noexcept;

// votes[m][s]: model m's prediction for subject s; probs[m][s] its p(RICE).
// Modal class per subject; ties (even model counts) go to RICE iff the mean
// p(RICE) over models exceeds 0.5.
std::vector<int> majority_vote(const std::vector<std::vector<int>>& votes,
                               const std::vector<std::vector<double>>& probs);

double mean_of(std::span<const double> v);
// Population standard deviation (divisor N).
double population_sd(std::span<const double> v);

} // namespace ricenet
