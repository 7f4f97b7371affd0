#include "sebm/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sebm::synth {

std::string family_name(IrregularFamily family) {
  switch (family) {
    case IrregularFamily::none: return "none";
    case IrregularFamily::triangular_mix: return "triangular_mix";
    case IrregularFamily::pareto_mix: return "pareto_mix";
    case IrregularFamily::arcsine_mix: return "arcsine_mix";
    case IrregularFamily::gamma_mix: return "gamma_mix";
    case IrregularFamily::cauchy_clip: return "cauchy_clip";
    case IrregularFamily::spike_logistic: return "spike_logistic";
  }
  throw std::logic_error("family_name: unknown family");
}

IrregularFamily family_from_name(const std::string& name) {
  for (IrregularFamily f :
       {IrregularFamily::none, IrregularFamily::triangular_mix, IrregularFamily::pareto_mix,
        IrregularFamily::arcsine_mix, IrregularFamily::gamma_mix, IrregularFamily::cauchy_clip,
        IrregularFamily::spike_logistic})
    if (family_name(f) == name) return f;
  throw std::invalid_argument("unknown irregular family: " + name);
}

BiomarkerTable default_biomarker_table() {
  using F = IrregularFamily;
  return {
      {"MMSE", 25.31, 2.38, 29.17, 0.81, F::triangular_mix},
      {"ADAS13", 21.79, 9.51, 9.32, 3.91, F::triangular_mix},
      {"RAVLT_immediate", 27.50, 7.93, 45.39, 9.36, F::triangular_mix},
      {"ABETA", 661.23, 195.29, 1331.37, 214.57, F::pareto_mix},
      {"TAU", 385.84, 138.95, 208.11, 58.84, F::pareto_mix},
      {"PTAU", 37.21, 15.09, 17.88, 5.13, F::pareto_mix},
      {"VentricleNorm", 0.0359, 0.0128, 0.0198, 0.0069, F::arcsine_mix},
      {"HippocampusNorm", 0.00390, 0.00065, 0.00511, 0.00059, F::arcsine_mix},
      {"WholeBrainNorm", 0.6311, 0.0346, 0.6949, 0.0389, F::gamma_mix},
      {"EntorhinalNorm", 0.00217, 0.00050, 0.00253, 0.00038, F::gamma_mix},
      {"FusiformNorm", 0.01116, 0.00167, 0.01186, 0.00140, F::cauchy_clip},
      {"MidTempNorm", 0.01241, 0.00179, 0.01344, 0.00140, F::spike_logistic},
  };
}

EmissionParams emission_of(const BiomarkerTable& table) {
  EmissionParams p;
  for (const auto& b : table) {
    p.theta_mean.push_back(b.theta_mean);
    p.theta_std.push_back(b.theta_std);
    p.phi_mean.push_back(b.phi_mean);
    p.phi_std.push_back(b.phi_std);
  }
  p.validate();
  return p;
}

std::vector<std::string> names_of(const BiomarkerTable& table) {
  std::vector<std::string> names;
  for (const auto& b : table) names.push_back(b.name);
  return names;
}

std::vector<int> mallows_sample(std::span<const int> reference, double dispersion,
                                Rng& rng) {
  const std::size_t n = reference.size();
  if (n < 2) throw std::invalid_argument("mallows_sample: need at least 2 items");
  if (!(dispersion > 0.0)) throw std::invalid_argument("mallows_sample: dispersion must be > 0");
  const std::vector<int> by_position = inverse_permutation(reference);

  // Repeated insertion: item at reference position i goes to slot j <= i
  // with probability proportional to q^(i-j); each displacement costs one
  // discordant pair, so the draw is Mallows around the reference.
  const double pairs = 0.5 * static_cast<double>(n) * (n - 1);
  const double q = std::exp(-1.0 / (dispersion * pairs));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<int> sequence;
  sequence.reserve(n);
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    weights.resize(i + 1);
    double total = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      weights[j] = std::pow(q, static_cast<double>(i - j));
      total += weights[j];
    }
    double u = unif(rng) * total, acc = 0.0;
    std::size_t slot = i;
    for (std::size_t j = 0; j <= i; ++j) {
      acc += weights[j];
      if (u < acc) {
        slot = j;
        break;
      }
    }
    sequence.insert(sequence.begin() + slot, by_position[i]);
  }

  std::vector<int> ranks(n);
  for (std::size_t pos = 0; pos < n; ++pos) ranks[sequence[pos]] = static_cast<int>(pos);
  return ranks;
}

SubtypeStructure sample_subtype_structure(std::size_t n_biomarkers, Rng& rng) {
  if (n_biomarkers < 2)
    throw std::invalid_argument("sample_subtype_structure: need at least 2 biomarkers");
  SubtypeStructure out;
  std::uniform_int_distribution<int> pick_T(1, 5);
  out.n_subtypes = pick_T(rng);
  std::uniform_real_distribution<double> pick_d(0.01, 0.5);
  out.dispersion = pick_d(rng);

  std::vector<int> reference(n_biomarkers);
  std::iota(reference.begin(), reference.end(), 0);
  std::shuffle(reference.begin(), reference.end(), rng);

  double dispersion = out.dispersion;
  for (int t = 0; t < out.n_subtypes; ++t) {
    for (int attempt = 0;; ++attempt) {
      std::vector<int> seq = mallows_sample(reference, dispersion, rng);
      if (std::find(out.orderings.ranks.begin(), out.orderings.ranks.end(), seq) ==
          out.orderings.ranks.end()) {
        out.orderings.ranks.push_back(std::move(seq));
        break;
      }
      if (attempt >= 1000) {
        // Extremely tight draws can collide forever; loosen and keep going.
        dispersion *= 1.5;
        attempt = 0;
      }
    }
  }
  out.dispersion = dispersion;
  return out;
}

SubtypeAssignment assign_subtypes(std::size_t n_progressing, int n_subtypes, Rng& rng) {
  const double dm_choices[] = {0.1, 2.0, 5.0, 20.0};
  std::uniform_int_distribution<int> pick(0, 3);
  return assign_subtypes_with_prior(n_progressing, n_subtypes, dm_choices[pick(rng)], rng);
}

SubtypeAssignment assign_subtypes_with_prior(std::size_t n_progressing, int n_subtypes,
                                             double dm_prior, Rng& rng) {
  if (n_subtypes < 1) throw std::invalid_argument("assign_subtypes: bad subtype count");
  if (n_progressing < 10 * static_cast<std::size_t>(n_subtypes))
    throw std::invalid_argument(
        "assign_subtypes: need at least ten progressing participants per subtype");

  SubtypeAssignment out;
  out.dm_prior = dm_prior;
  const std::vector<double> alpha(n_subtypes, out.dm_prior);
  // Sparse priors with many subtypes can reject heavily (tens of thousands
  // of tries for dm = 0.1, T = 5, 75 progressing); the bound covers that.
  for (int attempt = 0; attempt < 200000; ++attempt) {
    const std::vector<double> weights = sample_dirichlet(alpha, rng);
    out.labels.assign(n_progressing, 0);
    out.counts.assign(n_subtypes, 0);
    for (std::size_t j = 0; j < n_progressing; ++j) {
      const int t = static_cast<int>(sample_categorical(weights, rng));
      out.labels[j] = t;
      ++out.counts[t];
    }
    if (*std::min_element(out.counts.begin(), out.counts.end()) >= 10) return out;
  }
  throw std::runtime_error("assign_subtypes: could not satisfy the minimum subtype size");
}

namespace {

std::vector<double> stage_base_measure(std::size_t n, bool bell) {
  std::vector<double> base(n, 1.0 / static_cast<double>(n));
  if (bell) {
    const double center = 0.5 * static_cast<double>(n - 1);
    const double spread = static_cast<double>(n) / 4.0;
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double z = (static_cast<double>(k) - center) / spread;
      base[k] = std::exp(-0.5 * z * z);
      total += base[k];
    }
    for (double& b : base) b /= total;
  }
  return base;
}

}  // namespace

std::vector<double> sample_stages(int experiment_id, std::size_t n_biomarkers,
                                  std::span<const int> subtype_labels, Rng& rng) {
  if (experiment_id < 1 || experiment_id > 11)
    throw std::invalid_argument("sample_stages: experiment id out of range");
  const std::size_t n_prog = subtype_labels.size();
  std::vector<double> stages(n_prog, 0.0);

  if (experiment_id <= 4) {
    // Ordinal stages from a per-subtype Dirichlet-Multinomial; total
    // concentration 20 over a bell-shaped (1-2) or flat (3-4) base.
    const bool bell = experiment_id <= 2;
    const std::vector<double> base = stage_base_measure(n_biomarkers, bell);
    std::vector<double> alpha(n_biomarkers);
    for (std::size_t k = 0; k < n_biomarkers; ++k) alpha[k] = 20.0 * base[k];

    const int T = subtype_labels.empty()
                      ? 0
                      : *std::max_element(subtype_labels.begin(), subtype_labels.end()) + 1;
    std::vector<std::vector<double>> stage_dist(T);
    for (int t = 0; t < T; ++t) stage_dist[t] = sample_dirichlet(alpha, rng);
    for (std::size_t j = 0; j < n_prog; ++j)
      stages[j] = static_cast<double>(sample_categorical(stage_dist[subtype_labels[j]], rng));
    return stages;
  }

  if (experiment_id == 5 || experiment_id == 6 || experiment_id == 8) {
    std::uniform_real_distribution<double> unif(0.0, static_cast<double>(n_biomarkers));
    for (double& s : stages) s = unif(rng);
    return stages;
  }

  // 7, 9, 10, 11: one global scaled Beta(5, 2).
  std::gamma_distribution<double> g_a(5.0, 1.0), g_b(2.0, 1.0);
  for (double& s : stages) {
    const double a = g_a(rng), b = g_b(rng);
    s = static_cast<double>(n_biomarkers) * a / (a + b);
  }
  return stages;
}

std::vector<double> generate_ebm(const RowContext& ctx, const EmissionParams& params,
                                 Rng& rng) {
  const std::size_t N = params.n_biomarkers();
  if (ctx.event_positions.size() != N)
    throw std::invalid_argument("generate_ebm: context length mismatch");
  std::vector<double> values(N);
  for (std::size_t n = 0; n < N; ++n) {
    const bool post = is_post_event(ctx.event_positions[n], ctx.stage, ctx.progressing);
    std::normal_distribution<double> d(post ? params.theta_mean[n] : params.phi_mean[n],
                                       post ? params.theta_std[n] : params.phi_std[n]);
    values[n] = d(rng);
  }
  return values;
}

namespace {

double draw_triangular(double a, double mode, double b, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const double fc = (mode - a) / (b - a);
  if (u < fc) return a + std::sqrt(u * (b - a) * (mode - a));
  return b - std::sqrt((1.0 - u) * (b - a) * (b - mode));
}

double draw_logistic(double location, double scale, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);
  return location + scale * std::log(u / (1.0 - u));
}

double draw_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng), y = gb(rng);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

double draw_pareto(double shape, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  u = std::min(u, 1.0 - 1e-15);
  return std::pow(1.0 - u, -1.0 / shape);
}

}  // namespace

IrregularDraw sample_irregular_tagged(IrregularFamily family, double mu, double sigma,
                                      Rng& rng) {
  if (family == IrregularFamily::none)
    throw std::invalid_argument("sample_irregular: biomarker has no irregular family");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> third(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);

  IrregularDraw draw;
  switch (family) {
    case IrregularFamily::triangular_mix: {
      draw.component = third(rng);
      if (draw.component == 0)
        draw.value = draw_triangular(mu - 2.0 * sigma, mu - 1.5 * sigma, mu, rng);
      else if (draw.component == 1)
        draw.value = std::normal_distribution<double>(mu + sigma, 0.3 * sigma)(rng);
      else
        draw.value = std::exponential_distribution<double>(1.0 / (0.7 * sigma))(rng) +
                     (mu - 0.5 * sigma);
      break;
    }
    case IrregularFamily::pareto_mix: {
      draw.component = third(rng);
      if (draw.component == 0)
        draw.value = sigma * draw_pareto(1.5, rng) + (mu - 2.0 * sigma);
      else if (draw.component == 1)
        draw.value = std::uniform_real_distribution<double>(mu - 1.5 * sigma,
                                                            mu + 1.5 * sigma)(rng);
      else
        draw.value = draw_logistic(mu, sigma, rng);
      break;
    }
    case IrregularFamily::arcsine_mix: {
      draw.component = third(rng);
      if (draw.component == 0)
        draw.value = 4.0 * sigma * draw_beta(0.5, 0.5, rng) + (mu - 2.0 * sigma);
      else if (draw.component == 1) {
        const double e = std::exponential_distribution<double>(1.0 / (0.4 * sigma))(rng);
        draw.value = mu + (coin(rng) == 0 ? e : -e);
      } else {
        const double spike = coin(rng) == 0 ? 0.0 : 2.0 * sigma;
        draw.value = std::normal_distribution<double>(mu, 0.5 * sigma)(rng) + spike;
      }
      break;
    }
    case IrregularFamily::gamma_mix: {
      draw.component = third(rng);
      if (draw.component == 0)
        draw.value = std::gamma_distribution<double>(2.0, 0.5 * sigma)(rng) + (mu - sigma);
      else if (draw.component == 1)
        draw.value = sigma * std::weibull_distribution<double>(1.0, 1.0)(rng) + (mu - sigma);
      else
        draw.value = std::normal_distribution<double>(mu, 0.5 * sigma)(rng) +
                     (coin(rng) == 0 ? sigma : -sigma);
      break;
    }
    case IrregularFamily::cauchy_clip: {
      draw.component = 0;
      const double c = std::cauchy_distribution<double>(mu, sigma)(rng);
      draw.value = std::clamp(c, mu - 4.0 * sigma, mu + 4.0 * sigma);
      break;
    }
    case IrregularFamily::spike_logistic: {
      draw.component = unif(rng) < 0.1 ? 0 : 1;
      draw.value = draw.component == 0
                       ? std::normal_distribution<double>(mu, 0.2 * sigma)(rng)
                       : draw_logistic(mu + sigma, 2.0 * sigma, rng);
      break;
    }
    case IrregularFamily::none:
      break;  // unreachable
  }

  // Shared perturbation and clipping step.
  draw.raw = draw.value;
  draw.value += std::normal_distribution<double>(0.0, 0.2 * sigma)(rng);
  draw.value = std::clamp(draw.value, mu - 5.0 * sigma, mu + 5.0 * sigma);
  return draw;
}

double sample_irregular(const BiomarkerTable& table, std::size_t biomarker,
                        EventState state, Rng& rng) {
  if (biomarker >= table.size())
    throw std::invalid_argument("sample_irregular: biomarker index out of range");
  const BiomarkerDef& def = table[biomarker];
  const double mu = state == EventState::post ? def.theta_mean : def.phi_mean;
  const double sigma = state == EventState::post ? def.theta_std : def.phi_std;
  return sample_irregular_tagged(def.family, mu, sigma, rng).value;
}

SigmoidParams make_sigmoid_params(const EmissionParams& params, Rng& rng) {
  const std::size_t N = params.n_biomarkers();
  SigmoidParams sp;
  sp.direction_flip.resize(N);
  sp.range.resize(N);
  sp.slope.resize(N);
  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t n = 0; n < N; ++n) {
    sp.direction_flip[n] = coin(rng);
    sp.range[n] = params.theta_mean[n] - params.phi_mean[n];
    const double pooled = std::sqrt(params.theta_std[n] * params.theta_std[n] +
                                    params.phi_std[n] * params.phi_std[n]);
    sp.slope[n] = std::max(1.0, std::abs(sp.range[n]) / pooled);
  }
  return sp;
}

double sigmoid_offset(const SigmoidParams& sp, std::size_t n, double stage) {
  const double sign = sp.direction_flip[n] == 0 ? 1.0 : -1.0;
  return sign * sp.range[n] /
         (1.0 + std::exp(-sp.slope[n] * (stage - sp.inflection[n])));
}

std::vector<double> generate_sigmoid(const RowContext& ctx, const EmissionParams& params,
                                     const SigmoidParams& sp, Rng& rng) {
  const std::size_t N = params.n_biomarkers();
  if (sp.inflection.size() != N)
    throw std::invalid_argument("generate_sigmoid: inflection positions not set");
  std::vector<double> values(N);
  for (std::size_t n = 0; n < N; ++n) {
    values[n] = std::normal_distribution<double>(params.phi_mean[n], params.phi_std[n])(rng);
    if (ctx.progressing) values[n] += sigmoid_offset(sp, n, ctx.stage);
  }
  return values;
}

EventTimes sample_event_times(std::size_t n_biomarkers, int n_subtypes, Rng& rng) {
  EventTimes out;
  out.times = Matrix(n_subtypes, n_biomarkers);
  for (int t = 0; t < n_subtypes; ++t) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      std::vector<double> row(n_biomarkers);
      for (double& v : row) v = static_cast<double>(n_biomarkers) * draw_beta(2.0, 2.0, rng);
      // Induced ordering: biomarker with the i-th smallest time gets rank i.
      std::vector<std::size_t> order(n_biomarkers);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
      std::vector<int> ranks(n_biomarkers);
      for (std::size_t pos = 0; pos < n_biomarkers; ++pos)
        ranks[order[pos]] = static_cast<int>(pos);
      if (std::find(out.induced.ranks.begin(), out.induced.ranks.end(), ranks) !=
          out.induced.ranks.end())
        continue;
      std::copy(row.begin(), row.end(), out.times.row(t).begin());
      out.induced.ranks.push_back(std::move(ranks));
      break;
    }
    if (out.induced.ranks.size() != static_cast<std::size_t>(t) + 1)
      throw std::runtime_error("sample_event_times: could not draw distinct orderings");
  }
  return out;
}

SyntheticData generate_dataset(const GenerationSpec& spec) {
  if (spec.experiment_id < 1 || spec.experiment_id > 11)
    throw std::invalid_argument("generate_dataset: experiment id out of range");
  const std::size_t N = spec.biomarkers.size();
  if (N < 2) throw std::invalid_argument("generate_dataset: need at least 2 biomarkers");
  const std::size_t J = spec.participants;
  const auto n_healthy = static_cast<std::size_t>(
      std::llround(spec.healthy_ratio * static_cast<double>(J)));
  if (n_healthy < 1 || n_healthy >= J)
    throw std::invalid_argument("generate_dataset: healthy ratio leaves no usable split");
  const std::size_t n_prog = J - n_healthy;

  const bool continuous_times = spec.experiment_id >= 10;
  const bool irregular = spec.experiment_id == 2 || spec.experiment_id == 4 ||
                         spec.experiment_id == 6 || spec.experiment_id == 7;
  const bool sigmoid = spec.experiment_id == 8 || spec.experiment_id == 9 ||
                       spec.experiment_id == 11;

  Rng rng(spec.seed);
  const EmissionParams emission = emission_of(spec.biomarkers);

  SyntheticData out;
  GroundTruth& truth = out.truth;
  truth.experiment_id = spec.experiment_id;
  truth.seed = spec.seed;

  if (spec.forced_orderings) {
    spec.forced_orderings->validate();
    if (spec.forced_orderings->n_biomarkers() != N)
      throw std::invalid_argument("generate_dataset: forced orderings shape mismatch");
    truth.orderings = *spec.forced_orderings;
    truth.n_subtypes = static_cast<int>(truth.orderings.n_subtypes());
  } else if (continuous_times) {
    std::uniform_int_distribution<int> pick_T(1, 5);
    truth.n_subtypes = pick_T(rng);
    EventTimes et = sample_event_times(N, truth.n_subtypes, rng);
    truth.event_times = std::move(et.times);
    truth.orderings = std::move(et.induced);
  } else {
    SubtypeStructure structure = sample_subtype_structure(N, rng);
    truth.n_subtypes = structure.n_subtypes;
    truth.orderings = std::move(structure.orderings);
    truth.dispersion = structure.dispersion;
  }

  SubtypeAssignment assignment = assign_subtypes(n_prog, truth.n_subtypes, rng);
  truth.dm_prior = assignment.dm_prior;
  const std::vector<double> stages =
      sample_stages(spec.experiment_id, N, assignment.labels, rng);

  // Event positions per subtype: ordinal ranks or continuous times.
  std::vector<std::vector<double>> positions(truth.n_subtypes, std::vector<double>(N));
  for (int t = 0; t < truth.n_subtypes; ++t)
    for (std::size_t n = 0; n < N; ++n)
      positions[t][n] = continuous_times && truth.event_times.rows > 0
                            ? truth.event_times(t, n)
                            : static_cast<double>(truth.orderings.ranks[t][n]);

  std::vector<SigmoidParams> sigmoid_params;
  if (sigmoid) {
    SigmoidParams base = make_sigmoid_params(emission, rng);
    for (int t = 0; t < truth.n_subtypes; ++t) {
      SigmoidParams sp = base;
      sp.inflection.resize(N);
      for (std::size_t n = 0; n < N; ++n)
        // Inflection sits at the event's position in the cascade.
        sp.inflection[n] = continuous_times ? positions[t][n] : positions[t][n] + 0.5;
      sigmoid_params.push_back(std::move(sp));
    }
  }

  Dataset& data = out.dataset;
  data.values = Matrix(J, N);
  data.labels.resize(J);
  data.missing.assign(J * N, 0);
  data.biomarker_names = names_of(spec.biomarkers);
  truth.subtype_of.assign(J, -1);
  truth.stage_of.assign(J, -1.0);
  truth.post_event.assign(J * N, 0);

  char id[32];
  for (std::size_t j = 0; j < J; ++j) {
    std::snprintf(id, sizeof id, "sub_%04zu", j + 1);
    data.participant_ids.emplace_back(id);
    const bool progressing = j >= n_healthy;
    data.labels[j] = progressing ? 1 : 0;

    RowContext ctx;
    std::vector<double> healthy_positions(N, 0.0);
    if (progressing) {
      const std::size_t p = j - n_healthy;
      const int t = assignment.labels[p];
      truth.subtype_of[j] = t;
      truth.stage_of[j] = stages[p];
      ctx = {positions[t], stages[p], true};
    } else {
      ctx = {healthy_positions, -1.0, false};
    }

    std::vector<double> row;
    if (sigmoid) {
      const SigmoidParams& sp =
          progressing ? sigmoid_params[assignment.labels[j - n_healthy]] : sigmoid_params[0];
      row = generate_sigmoid(ctx, emission, sp, rng);
    } else if (irregular) {
      row.resize(N);
      for (std::size_t n = 0; n < N; ++n) {
        const bool post = is_post_event(ctx.event_positions[n], ctx.stage, ctx.progressing);
        row[n] = sample_irregular(spec.biomarkers, n,
                                  post ? EventState::post : EventState::pre, rng);
      }
    } else {
      row = generate_ebm(ctx, emission, rng);
    }
    for (std::size_t n = 0; n < N; ++n) {
      data.values(j, n) = row[n];
      truth.post_event[j * N + n] =
          is_post_event(ctx.event_positions[n], ctx.stage, ctx.progressing) ? 1 : 0;
    }
  }

  data.validate();
  return out;
}

}  // namespace sebm::synth
