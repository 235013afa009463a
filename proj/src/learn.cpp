#include "apd/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "apd/eval.hpp"
#include "apd/parallel.hpp"
#include "apd/random.hpp"

namespace apd {

std::string knn_classify(std::span<const double> scores, const std::vector<std::string>& labels, std::size_t k, ScoreKind kind) {
    if (scores.empty()) throw std::invalid_argument("knn_classify: empty training set");
    if (scores.size() != labels.size()) throw std::invalid_argument("knn_classify: score/label length mismatch");
    if (k < 1 || k > scores.size()) throw std::invalid_argument("knn_classify: k must be in [1, n]");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return kind == ScoreKind::Similarity ? scores[a] > scores[b] : scores[a] < scores[b];
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);

    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // label -> (count, best rank)
    for (std::size_t r = 0; r < k; ++r) {
        auto [it, inserted] = tally.try_emplace(labels[order[r]], 0, r);
        ++it->second.first;
    }
    const std::string* best = nullptr;
    std::pair<std::size_t, std::size_t> best_stat{0, 0};
    for (const auto& [label, stat] : tally) {
        if (!best || stat.first > best_stat.first || (stat.first == best_stat.first && stat.second < best_stat.second)) {
            best = &label;
            best_stat = stat;
        }
    }
    return *best;
}

double BinarySvmModel::decision(std::span<const double> kernel_row) const {
    double acc = bias;
    for (std::size_t s = 0; s < support.size(); ++s) {
        if (support[s] >= kernel_row.size()) throw std::invalid_argument("decision: kernel row shorter than training set");
        acc += coef[s] * kernel_row[support[s]];
    }
    return acc;
}

namespace {

constexpr double kTau = 1e-12;

double dual_objective(const std::vector<double>& alpha, const std::vector<double>& grad) {
    // W = sum(a) - 1/2 a'Qa, with grad = Qa - 1
    double w = 0;
    for (std::size_t t = 0; t < alpha.size(); ++t) w += alpha[t] - 0.5 * alpha[t] * (grad[t] + 1.0);
    return w;
}

}  // namespace

BinarySvmModel smo_train(const GramMatrix& g, std::span<const int> y, const SmoOptions& opts, SmoTrace* trace) {
    const std::size_t n = g.n;
    if (y.size() != n) throw std::invalid_argument("smo_train: label count does not match Gram size");
    if (!(opts.C > 0)) throw std::invalid_argument("smo_train: C must be > 0");
    if (!(opts.tol > 0)) throw std::invalid_argument("smo_train: tol must be > 0");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1)
            has_pos = true;
        else if (v == -1)
            has_neg = true;
        else
            throw std::invalid_argument("smo_train: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw std::invalid_argument("smo_train: one-class input");
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double u = g(a, b), v = g(b, a);
            if (std::fabs(u - v) > 1e-9 * std::max({1.0, std::fabs(u), std::fabs(v)}))
                throw std::invalid_argument("smo_train: Gram matrix is not symmetric");
        }

    const double C = opts.C;
    auto Q = [&](std::size_t a, std::size_t b) { return static_cast<double>(y[a] * y[b]) * g(a, b); };
    std::vector<double> alpha(n, 0.0), grad(n, -1.0);

    auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < C); };

    if (trace) {
        trace->dual_objective.clear();
        trace->dual_objective.push_back(dual_objective(alpha, grad));
        trace->converged = false;
    }

    const std::size_t cap = opts.max_passes * std::max<std::size_t>(n, 1);
    std::size_t iter = 0;
    bool converged = false;
    for (; iter < cap; ++iter) {
        std::size_t i = n, j = n;
        double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (i == n || j == n || gmax - gmin < opts.tol) {
            converged = true;
            break;
        }

        const double old_i = alpha[i], old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = g(i, i) + g(j, j) - 2.0 * g(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = g(i, i) + g(j, j) - 2.0 * g(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }

        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) grad[t] += Q(t, i) * di + Q(t, j) * dj;
        if (trace) trace->dual_objective.push_back(dual_objective(alpha, grad));
    }

    // bias: mean over free vectors, else midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= C) {
            if (y[t] == -1)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] == 1)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else {
            free_sum += yg;
            ++free_count;
        }
    }
    const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

    BinarySvmModel m;
    m.C = C;
    m.bias = -rho;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0) {
            m.support.push_back(t);
            m.coef.push_back(alpha[t] * y[t]);
        }
    if (trace) {
        trace->iterations = iter;
        trace->converged = converged;
    }
    return m;
}

OvoSvmModel svm_train_ovo(const GramMatrix& g, const std::vector<std::string>& labels, const SmoOptions& opts, unsigned threads) {
    if (labels.size() != g.n) throw std::invalid_argument("svm_train_ovo: label count does not match Gram size");
    OvoSvmModel model;
    model.train_size = g.n;
    const std::set<std::string> distinct(labels.begin(), labels.end());
    model.labels.assign(distinct.begin(), distinct.end());
    if (model.labels.size() < 2) throw std::invalid_argument("svm_train_ovo: need at least 2 distinct labels");

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < model.labels.size(); ++a)
        for (std::size_t b = a + 1; b < model.labels.size(); ++b) pairs.emplace_back(a, b);
    model.models.resize(pairs.size());

    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto& pos = model.labels[pairs[p].first];
        const auto& neg = model.labels[pairs[p].second];
        std::vector<std::size_t> rows;
        std::vector<int> y;
        for (std::size_t t = 0; t < labels.size(); ++t) {
            if (labels[t] == pos) {
                rows.push_back(t);
                y.push_back(1);
            } else if (labels[t] == neg) {
                rows.push_back(t);
                y.push_back(-1);
            }
        }
        BinarySvmModel bm = smo_train(g.subset(rows), y, opts);
        for (auto& s : bm.support) s = rows[s];
        bm.positive = pos;
        bm.negative = neg;
        model.models[p] = std::move(bm);
    });
    return model;
}

OvoVote svm_vote(const OvoSvmModel& model, std::span<const double> kernel_row) {
    if (kernel_row.size() != model.train_size)
        throw std::invalid_argument("svm_predict: kernel row length " + std::to_string(kernel_row.size()) + " != training size " +
                                    std::to_string(model.train_size));
    OvoVote v;
    v.votes.assign(model.labels.size(), 0);
    v.margin_sums.assign(model.labels.size(), 0.0);
    auto index_of = [&](const std::string& l) {
        return static_cast<std::size_t>(std::lower_bound(model.labels.begin(), model.labels.end(), l) - model.labels.begin());
    };
    for (const auto& bm : model.models) {
        const double d = bm.decision(kernel_row);
        const std::size_t winner = index_of(d > 0 ? bm.positive : bm.negative);
        ++v.votes[winner];
        v.margin_sums[winner] += std::fabs(d);
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < model.labels.size(); ++a) {
        if (v.votes[a] > v.votes[best] || (v.votes[a] == v.votes[best] && v.margin_sums[a] > v.margin_sums[best])) best = a;
    }
    v.label = model.labels[best];
    return v;
}

std::string svm_predict(const OvoSvmModel& model, std::span<const double> kernel_row) { return svm_vote(model, kernel_row).label; }

CvResult cross_validate(const std::vector<std::string>& labels, const CvOptions& opts, const CvEvaluator& evaluate) {
    const std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw std::invalid_argument("cross_validate: need at least 2 labels");
    if (opts.repeats < 1) throw std::invalid_argument("cross_validate: repeats must be >= 1");
    if (opts.test_count < 1 || opts.test_count >= labels.size())
        throw std::invalid_argument("cross_validate: test_count must be in [1, n)");

    CvResult res;
    for (std::size_t rep = 0; rep < opts.repeats; ++rep) {
        std::vector<std::size_t> perm(labels.size());
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(mix_seed(opts.seed, rep));
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

        std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(opts.test_count));
        std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(opts.test_count), perm.end());
        std::sort(test.begin(), test.end());
        std::sort(train.begin(), train.end());

        std::set<std::string> train_labels;
        for (auto t : train) train_labels.insert(labels[t]);
        if (train_labels.size() != distinct.size())
            throw std::invalid_argument("cross_validate: repeat " + std::to_string(rep) + " leaves a label absent from training");

        const auto predicted = evaluate(train, test);
        std::vector<std::string> truth;
        for (auto t : test) truth.push_back(labels[t]);
        res.accuracies.push_back(accuracy(predicted, truth));
    }
    const double n = static_cast<double>(res.accuracies.size());
    res.mean = std::accumulate(res.accuracies.begin(), res.accuracies.end(), 0.0) / n;
    if (res.accuracies.size() > 1) {
        double ss = 0;
        for (double a : res.accuracies) ss += (a - res.mean) * (a - res.mean);
        res.stddev = std::sqrt(ss / (n - 1));
    }
    return res;
}

}  // namespace apd
