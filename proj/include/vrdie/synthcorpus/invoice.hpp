#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrdie/docmodel/types.hpp"
#include "vrdie/nn/rng.hpp"
#include "vrdie/synthcorpus/canvas.hpp"

namespace vrdie::synth {

// How a cue word relates to its value box: same row to the right, or
// directly underneath with a shared left edge.
enum class CueMode { RowAligned, ColumnAligned };

inline const char* cue_mode_name(CueMode m) { return m == CueMode::RowAligned ? "row" : "column"; }

// Inline labels end in a colon, column headings do not.
inline std::string cue_label(const std::string& cue, CueMode m) { return m == CueMode::RowAligned ? cue + ":" : cue; }

inline const std::vector<std::string>& invoice_entity_types() {
  static const std::vector<std::string> v{"Amount", "InvoiceNo", "PurchaserName", "SellerName"};
  return v;
}

struct InvoiceTemplate {
  std::string id;
  CueMode header_mode = CueMode::RowAligned;  // seller, purchaser, number and date blocks
  CueMode totals_mode = CueMode::RowAligned;
  int lexicon_group = 0;
  FontSpec body{"Helvetica", 10};
  FontSpec cue{"Helvetica-Bold", 10};
  FontSpec title{"Helvetica-Bold", 20};
  double margin = 40;
  double right_block_x = 360;
  double totals_x = 300;
  std::string title_text = "INVOICE";
  std::string seller_cue = "From";
  std::string purchaser_cue = "Bill To";
  std::string number_cue = "Invoice No";
  std::string date_cue = "Date";
  std::string number_prefix = "INV-";
  std::string currency = "$";
  std::string total_cue = "Total";
  // cues listed before the total precede it on the page, the rest follow it
  std::vector<std::string> cues_before{"Subtotal", "Net Amount"};
  std::vector<std::string> cues_after{"Deposit", "Balance Due"};
  std::size_t total_slot = 1;  // position of the gold price within the totals block, clamped to ambiguity-1
  int min_items = 1;
  int max_items = 3;

  std::size_t slot(std::size_t ambiguity) const { return std::min(total_slot, ambiguity - 1); }

  void validate(std::size_t ambiguity) const {
    const std::string where = "invoice template " + id + ": ";
    if (id.empty()) throw std::invalid_argument("invoice template with empty id");
    if (ambiguity < 2) throw std::invalid_argument(where + "ambiguity must be at least 2");
    if (slot(ambiguity) > cues_before.size() || ambiguity - 1 - slot(ambiguity) > cues_after.size())
      throw std::invalid_argument(where + "not enough distractor cues around total_slot at this ambiguity");
    if (min_items < 1 || max_items < min_items || max_items > 6) throw std::invalid_argument(where + "bad item range");
    if (cue == body) throw std::invalid_argument(where + "cue font must differ from body font");
    if (!(body.size > 0 && cue.size > 0 && title.size > 0)) throw std::invalid_argument(where + "font sizes must be positive");
    if (margin < 0 || margin > 120 || right_block_x < 250 || right_block_x > 400 || totals_x < 200 || totals_x > 330)
      throw std::invalid_argument(where + "block position out of range");
    if (totals_mode == CueMode::ColumnAligned && totals_x + 90.0 * static_cast<double>(ambiguity - 1) + 80 > 600)
      throw std::invalid_argument(where + "totals block does not fit the page at this ambiguity");
  }
};

// Ten seen templates and two held-out ones (T10, T11) with their own seller
// lexicon, fonts and cue wording.
inline std::vector<InvoiceTemplate> default_invoice_templates() {
  std::vector<InvoiceTemplate> out;
  const FontSpec bodies[] = {{"Helvetica", 10}, {"Arial", 10}, {"Times", 10}, {"Calibri", 10}};
  const FontSpec cues[] = {{"Helvetica-Bold", 10}, {"Arial-Bold", 10}, {"Times-Bold", 10}, {"Calibri-Bold", 10}};
  for (int k = 0; k < 10; ++k) {
    InvoiceTemplate t;
    t.id = "T" + zero_pad(static_cast<std::uint64_t>(k), 2);
    t.header_mode = k % 2 == 0 ? CueMode::RowAligned : CueMode::ColumnAligned;
    t.totals_mode = (k / 2) % 2 == 0 ? CueMode::RowAligned : CueMode::ColumnAligned;
    t.body = bodies[k % 4];
    t.cue = cues[(k + k / 4) % 4];
    t.title = {t.cue.name, 18.0 + k % 3 * 2};
    t.margin = 30 + 6 * k;
    t.right_block_x = 330 + 6 * k;
    t.totals_x = 230 + 9 * k;
    t.total_slot = static_cast<std::size_t>(k % 3);
    if (k % 3 == 1) t.seller_cue = "Seller";
    if (k % 4 == 2) t.purchaser_cue = "Customer";
    if (k % 5 == 3) t.number_cue = "Invoice #";
    if (k % 2 == 1) t.title_text = "TAX INVOICE";
    t.number_prefix = k % 3 == 2 ? "No. " : "INV-";
    out.push_back(std::move(t));
  }
  for (int k = 0; k < 2; ++k) {
    InvoiceTemplate t;
    t.id = "T" + zero_pad(static_cast<std::uint64_t>(10 + k), 2);
    t.header_mode = k == 0 ? CueMode::ColumnAligned : CueMode::RowAligned;
    t.totals_mode = k == 0 ? CueMode::RowAligned : CueMode::ColumnAligned;
    t.lexicon_group = 1;
    t.body = {"Garamond", 10};
    t.cue = {"Garamond-Bold", 10};
    t.title = {"Garamond-Bold", 22};
    t.margin = 50 + 20 * k;
    t.right_block_x = 380 - 20 * k;
    t.totals_x = 260 + 40 * k;
    t.seller_cue = "Vendor";
    t.purchaser_cue = "Guest";
    t.number_cue = "Folio No";
    t.number_prefix = "HT-";
    t.title_text = "HOTEL INVOICE";
    t.total_slot = static_cast<std::size_t>(2 - k);
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<InvoiceTemplate> select_templates(const std::vector<InvoiceTemplate>& all,
                                                     const std::vector<std::string>& ids) {
  std::vector<InvoiceTemplate> out;
  for (const auto& id : ids) {
    bool found = false;
    for (const auto& t : all)
      if (t.id == id) {
        out.push_back(t);
        found = true;
      }
    if (!found) throw std::invalid_argument("unknown invoice template " + id);
  }
  return out;
}

struct InvoiceSpec {
  std::size_t num_docs = 1000;
  std::vector<InvoiceTemplate> templates = default_invoice_templates();
  std::size_t ambiguity = 3;  // byte-identical price boxes per page, one of them gold
  std::uint64_t seed = 0;
  std::string id_prefix = "inv";
};

inline std::string seller_name(nn::Rng& rng, int group) {
  return rng.pick(lex::company_heads(group)) + " " + rng.pick(lex::company_trades(group)) + " " +
         rng.pick(lex::company_suffixes());
}

inline doc::Document make_invoice(const InvoiceTemplate& t, std::size_t ambiguity, std::uint64_t seed,
                                  const std::string& doc_id) {
  t.validate(ambiguity);
  nn::Rng rng(seed);
  Canvas c(600, 800);
  const double dx = rng.range(-6, 6), dy = rng.range(-6, 6);
  const double m = t.margin + dx;

  // cue/value pair; returns the value box
  auto pair = [&](CueMode mode, const std::string& cue, const std::string& value, double x, double y,
                  const std::string& entity) -> doc::TextBox& {
    c.add(cue_label(cue, mode), x, y, t.cue);
    if (mode == CueMode::RowAligned) return c.add(value, x + text_width(cue_label(cue, mode), t.cue.size) + 10, y, t.body, entity);
    return c.add(value, x, y + line_height(t.cue.size) + 4, t.body, entity);
  };
  const double step = t.header_mode == CueMode::RowAligned ? 18 : 36;

  c.add(t.title_text, m, 36 + dy, t.title);

  const double rx = t.right_block_x + dx;
  const std::string number = t.number_prefix + zero_pad(rng.below(1000000), 6);
  pair(t.header_mode, t.number_cue, number, rx, 90 + dy, "InvoiceNo");
  const std::string date = std::to_string(rng.range(1, 28)) + " " + rng.pick(lex::months()) + " " +
                           std::to_string(rng.range(2015, 2023));
  pair(t.header_mode, t.date_cue, date, rx, 90 + dy + step, "");

  const std::string seller = seller_name(rng, t.lexicon_group);
  const doc::TextBox sbox = pair(t.header_mode, t.seller_cue, seller, m, 90 + dy, "SellerName");
  c.add(street_address(rng), sbox.x0, sbox.y1 + 4, t.body);

  const double by = 90 + dy + 2 * step + 40;
  const doc::TextBox pbox = pair(t.header_mode, t.purchaser_cue, person_name(rng), m, by, "PurchaserName");
  c.add(street_address(rng), pbox.x0, pbox.y1 + 4, t.body);

  // line items
  const double ty = by + step + 50;
  const double cols[] = {m, m + 230, m + 290, m + 380};
  const char* heads[] = {"Description", "Qty", "Unit Price", "Line Total"};
  for (int k = 0; k < 4; ++k) c.add(heads[k], cols[k], ty, t.cue);
  const int items = rng.range(t.min_items, t.max_items);
  std::int64_t subtotal = 0;
  double y = ty;
  for (int i = 0; i < items; ++i) {
    y += 18;
    const int qty = rng.range(1, 9);
    const std::int64_t unit = static_cast<std::int64_t>(rng.range(500, 50000));
    subtotal += qty * unit;
    c.add(rng.pick(lex::item_names()), cols[0], y, t.body);
    c.add(std::to_string(qty), cols[1], y, t.body);
    c.add(format_money(unit, t.currency), cols[2], y, t.body);
    c.add(format_money(qty * unit, t.currency), cols[3], y, t.body);
  }

  // totals: every price box carries the same text, only the one beside or
  // under the total cue is gold; prices never share an edge line with each
  // other
  const std::size_t slot = t.slot(ambiguity);
  std::vector<std::string> cues(t.cues_before.end() - static_cast<std::ptrdiff_t>(slot), t.cues_before.end());
  cues.push_back(t.total_cue);
  cues.insert(cues.end(), t.cues_after.begin(), t.cues_after.begin() + static_cast<std::ptrdiff_t>(ambiguity - 1 - slot));
  for (auto& cue : cues) cue = cue_label(cue, t.totals_mode);
  const std::string price = format_money(subtotal, t.currency);
  const double tx = t.totals_x + dx;
  y += 40;
  for (std::size_t k = 0; k < ambiguity; ++k) {
    const std::string entity = k == slot ? "Amount" : "";
    const double kk = static_cast<double>(k);
    if (t.totals_mode == CueMode::RowAligned) {
      const auto& cue = c.add(cues[k], tx, y + 18 * kk, t.cue);
      c.add(price, cue.x1 + 10, cue.y0, t.body, entity);
    } else {
      const auto& cue = c.add(cues[k], tx + 90 * kk, y, t.cue);
      c.add(price, cue.x0, cue.y1 + 4 + 3 * kk, t.body, entity);
    }
  }

  c.add("Thank you for your business", m, 740 + dy, t.body);

  doc::Document d;
  d.doc_id = doc_id;
  d.template_id = t.id;
  d.pages.push_back(std::move(c.page()));
  return d;
}

// Document i draws its template and content from derive_seed(seed, {i}), so
// any subset can be regenerated independently.
inline std::vector<doc::Document> gen_invoices(const InvoiceSpec& spec) {
  if (spec.templates.empty()) throw std::invalid_argument("gen_invoices: no templates");
  for (const auto& t : spec.templates) t.validate(spec.ambiguity);
  std::vector<doc::Document> out;
  out.reserve(spec.num_docs);
  for (std::size_t i = 0; i < spec.num_docs; ++i) {
    const std::uint64_t s = nn::derive_seed(spec.seed, {i});
    nn::Rng pick(s);
    const auto& t = spec.templates[pick.below(spec.templates.size())];
    out.push_back(make_invoice(t, spec.ambiguity, nn::derive_seed(s, {1}), spec.id_prefix + "-" + zero_pad(i, 5)));
  }
  return out;
}

}  // namespace vrdie::synth
