#pragma once

#include <span>
#include <vector>

#include "oda/data.hpp"
#include "oda/divergence.hpp"

namespace oda {

class OdaModel;
struct BaselineModel;

/// Mean over points of min_i d(x, mu_i).
double average_distortion(const Divergence& div, std::span<const Vector> codebook,
                          const Dataset& data);

double accuracy(std::span<const Label> truth, std::span<const Label> predicted);
/// Unweighted mean over `classes` of per-class F1; a class with no
/// predictions (or no support) contributes 0.
double f1_macro(std::span<const Label> truth, std::span<const Label> predicted,
                std::span<const Label> classes);

double metric_distortion(const OdaModel& model, const Dataset& data);
double metric_accuracy(const OdaModel& model, const Dataset& data);
double metric_f1(const OdaModel& model, const Dataset& data);

double metric_distortion(const BaselineModel& model, const Dataset& data);
double metric_accuracy(const BaselineModel& model, const Dataset& data);
double metric_f1(const BaselineModel& model, const Dataset& data);

std::vector<Label> predict_all(const OdaModel& model, const Dataset& data);
std::vector<Label> predict_all(const BaselineModel& model, const Dataset& data);

}  // namespace oda
