#pragma once

#include <span>
#include <string>
#include <vector>

#include "forgemorph/morph.hpp"

namespace forgemorph::distill {

using morph::LayerBlock;
using netgraph::NetworkGraph;

struct DistillParams {
  double lambda = 0.5;   // ground-truth weight in [0, 1]
  double tau = 4.0;      // softmax temperature > 0
  double alpha0 = 0.1;   // initial learning rate
  double gamma = 0.9;    // decay factor in (0, 1)
  int epochs = 10;       // alternating teacher/student cycles per stage

  void validate() const;
};

/// Numerically stable softmax of logits / tau.
std::vector<double> softened(std::span<const double> logits, double tau);

/// Cross entropy of one-hot labels against softmax(logits); log-sum-exp
/// stabilized.
double cross_entropy(std::span<const double> one_hot,
                     std::span<const double> logits);

/// KL(softmax(teacher / tau) || softmax(student / tau)), unscaled.
double kl_softened(std::span<const double> teacher,
                   std::span<const double> student, double tau);

/// Distillation loss tau^2 * KL of the softened distributions. Zero iff
/// the softened distributions coincide.
double kd_loss(std::span<const double> teacher, std::span<const double> student,
               double tau);

/// Analytic gradient of kd_loss with respect to the student logits:
/// tau * (softmax(student / tau) - softmax(teacher / tau)).
std::vector<double> kd_loss_grad_student(std::span<const double> teacher,
                                         std::span<const double> student,
                                         double tau);

double total_loss(double l_gt, double l_kd, double lambda);

/// alpha_t = alpha0 * gamma^t.
double lr_decay(double alpha0, double gamma, int t);

enum class ScheduleKind { Depth, Width };

struct LrStep {
  int epoch = 0;            // 1-based within the stage
  double alpha = 0;         // step size for both phases this epoch
  double old_layer_scale = 0;  // gamma^epoch multiplier for layers of
                               // earlier stages
};

struct ScheduleStage {
  std::vector<std::string> active_blocks;
  std::vector<int> active_widths;  // per conv layer
  int teacher_epochs = 0;
  int student_epochs = 0;
  double lambda = 0;
  double tau = 0;
  std::vector<LrStep> lr_plan;
};

struct MorphingSchedule {
  ScheduleKind kind = ScheduleKind::Depth;
  std::vector<ScheduleStage> stages;
};

/// Stage plan per the growth recursion: depth stages take increasing
/// block prefixes; width stages climb the fraction ladder. Every stage
/// carries a teacher phase followed by a student phase, the per-epoch
/// step size dividing by ten and earlier layers decaying by gamma^epoch.
MorphingSchedule build_schedule(const NetworkGraph& graph,
                                const std::vector<LayerBlock>& blocks,
                                ScheduleKind kind, const DistillParams& params,
                                const std::vector<double>& width_ladder = {0.5, 1.0});

std::string schedule_to_json(const MorphingSchedule& schedule);

}  // namespace forgemorph::distill
