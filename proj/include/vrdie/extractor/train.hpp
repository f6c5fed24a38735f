#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/evalkit/metrics.hpp"
#include "vrdie/extractor/model.hpp"
#include "vrdie/nn/optim.hpp"

namespace vrdie::extract {

struct TrainConfig {
  std::size_t max_epochs = 100;
  std::size_t patience = 5;  // epochs without validation improvement; 0 disables early stopping
  double lr_encoder = 1e-3;
  double lr_rest = 1e-3;
  std::size_t pages_per_step = 1;
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> log;  // optional progress sink
};

struct EpochStat {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_f1 = 0;
};

struct TrainResult {
  Model model;  // best-validation model (last epoch when there is no validation set)
  std::vector<EpochStat> history;
  std::size_t best_epoch = 0;
  double best_val_f1 = 0;
};

inline eval::EvalCounts evaluate_pages(const Model& m, const std::vector<PreparedPage>& pages) {
  eval::EvalCounts c(m.tags().types());
  for (const auto& p : pages) {
    const auto pred = predict_tags(m, p);
    for (std::size_t b = 0; b < p.boxes.size(); ++b) eval::score_into(pred[b], p.boxes[b].toks.bio_tags, c);
  }
  return c;
}

inline eval::EvalCounts evaluate(const Model& m, const std::vector<doc::Document>& docs) {
  return evaluate_pages(m, prepare_corpus(docs, m.config(), m.vocab(), &m.tags()));
}

// Encoder parameters form one Adam group, everything else (font table, GCN,
// head) the other.
inline std::vector<nn::ParamGroup> param_groups(Model& m, double lr_encoder, double lr_rest) {
  nn::ParamGroup enc{"encoder", {}, {}}, rest{"gcn_head", {}, {}};
  enc.hyper.lr = lr_encoder;
  rest.hyper.lr = lr_rest;
  m.visit([&](Parameter& p) { (p.name.rfind("enc.", 0) == 0 ? enc : rest).params.push_back(&p); });
  return {enc, rest};
}

// Per-page batches, shuffled each epoch; early stopping on validation micro-F1.
inline TrainResult train_prepared(Model model, const std::vector<PreparedPage>& train,
                                  const std::vector<PreparedPage>& val, const TrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("train_supervised: empty training set");
  if (cfg.pages_per_step == 0) throw std::invalid_argument("train_supervised: pages_per_step must be >= 1");
  for (const auto& p : train)
    if (!p.labeled) throw std::invalid_argument("train_supervised: unlabeled training page in " + p.doc_id);
  TrainResult res;
  nn::Adam opt(param_groups(model, cfg.lr_encoder, cfg.lr_rest));
  opt.zero_grad();
  const bool early = !val.empty() && cfg.patience > 0;
  double best = -1.0;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(nn::derive_seed(cfg.seed, {0x5e, epoch}));
    shuffle_rng.shuffle(order);
    double loss_sum = 0;
    std::size_t pending = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const PreparedPage& page = train[order[k]];
      Rng drop_rng(nn::derive_seed(cfg.seed, {0xd0, epoch, k}));
      Tape t(true);
      Var loss = page_loss(t, model, page, true, &drop_rng);
      loss_sum += loss.value()[0];
      t.backward(cfg.pages_per_step == 1 ? loss : nn::scale(loss, 1.0 / static_cast<double>(cfg.pages_per_step)));
      if (++pending == cfg.pages_per_step || k + 1 == order.size()) {
        opt.step();
        pending = 0;
      }
    }
    EpochStat st{epoch, loss_sum / static_cast<double>(order.size()), 0.0};
    if (!val.empty()) st.val_f1 = evaluate_pages(model, val).micro_f1();
    res.history.push_back(st);
    if (cfg.log)
      cfg.log("epoch " + std::to_string(epoch) + " loss " + std::to_string(st.train_loss) +
              (val.empty() ? std::string() : " val_f1 " + std::to_string(st.val_f1)));
    if (!early) continue;
    if (st.val_f1 > best) {
      best = st.val_f1;
      res.model = model;
      res.best_epoch = epoch;
      res.best_val_f1 = best;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (!early) {
    res.model = std::move(model);
    res.best_epoch = res.history.size();
    res.best_val_f1 = res.history.back().val_f1;
  }
  return res;
}

inline TrainResult train_supervised(const std::vector<doc::Document>& train_docs, const std::vector<doc::Document>& val_docs,
                                    Model init, const TrainConfig& cfg) {
  if (train_docs.empty()) throw std::invalid_argument("train_supervised: empty training set");
  const auto train = prepare_corpus(train_docs, init.config(), init.vocab(), &init.tags());
  const auto val = prepare_corpus(val_docs, init.config(), init.vocab(), &init.tags());
  return train_prepared(std::move(init), train, val, cfg);
}

}  // namespace vrdie::extract
