#include "probsarah/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "probsarah/error.hpp"
#include "probsarah/kernels.hpp"

namespace probsarah {
namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

double parse_double(std::string_view tok, std::size_t line_no,
                    const char* what) {
  // std::from_chars takes no leading '+', but LIBSVM labels are usually +1.
  std::string_view body = tok;
  if (body.size() >= 2 && body[0] == '+' && body[1] != '-' && body[1] != '+')
    body.remove_prefix(1);
  double v = 0.0;
  const auto* end = body.data() + body.size();
  const auto res = std::from_chars(body.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    fail(line_no, std::string("bad ") + what + " '" + std::string(tok) + "'");
  return v;
}

}  // namespace

double Dataset::max_row_norm() const {
  double m = 0.0;
  for (double v : row_norms) m = std::max(m, v);
  return m;
}

Dataset parse_libsvm(std::string_view text, std::size_t min_dim) {
  Dataset ds;
  ds.offsets.push_back(0);
  std::uint32_t max_id = 0;

  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    if (pos == text.size() && line_no > 0) break;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;

    std::size_t cur = first;
    bool have_label = false;
    std::uint32_t prev_id = 0;
    while (cur < line.size()) {
      std::size_t tok_end = line.find_first_of(" \t", cur);
      if (tok_end == std::string_view::npos) tok_end = line.size();
      std::string_view tok = line.substr(cur, tok_end - cur);
      cur = line.find_first_not_of(" \t", tok_end);
      if (cur == std::string_view::npos) cur = line.size();
      if (tok.empty()) continue;

      if (!have_label) {
        const double raw = parse_double(tok, line_no, "label");
        ds.labels.push_back(raw > 0.0 ? 1.0 : -1.0);
        have_label = true;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        fail(line_no, "expected id:value, got '" + std::string(tok) + "'");
      std::uint32_t id = 0;
      {
        const std::string_view id_tok = tok.substr(0, colon);
        const auto* end = id_tok.data() + id_tok.size();
        const auto res = std::from_chars(id_tok.data(), end, id);
        if (res.ec != std::errc() || res.ptr != end || id == 0)
          fail(line_no, "bad feature id '" + std::string(id_tok) + "'");
      }
      if (id <= prev_id)
        fail(line_no, "feature ids must be strictly increasing (saw " +
                          std::to_string(id) + " after " +
                          std::to_string(prev_id) + ")");
      prev_id = id;
      max_id = std::max(max_id, id);
      ds.indices.push_back(id);
      ds.values.push_back(parse_double(tok.substr(colon + 1), line_no, "value"));
    }
    if (!have_label) fail(line_no, "missing label");
    ds.offsets.push_back(ds.indices.size());
  }

  ds.n = ds.labels.size();
  if (ds.n == 0) throw ParseError("no samples in input");
  ds.d = std::max<std::size_t>(max_id, min_dim);
  compute_row_norms(ds);
  return ds;
}

Dataset load_libsvm_file(const std::string& path, std::size_t min_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_libsvm(buf.str(), min_dim);
  } catch (const ParseError& err) {
    throw ParseError(path + ": " + err.what());
  }
}

std::string serialize_libsvm(const Dataset& ds) {
  std::string out;
  char num[64];
  for (std::size_t i = 0; i < ds.n; ++i) {
    out += ds.labels[i] > 0 ? "+1" : "-1";
    const auto r = ds.row(i);
    for (std::size_t t = 0; t < r.idx.size(); ++t) {
      out.push_back(' ');
      out += std::to_string(r.idx[t]);
      out.push_back(':');
      const auto res = std::to_chars(num, num + sizeof(num), r.val[t]);
      out.append(num, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

void compute_row_norms(Dataset& ds) {
  ds.row_norms.resize(ds.n);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < ds.n; ++i) {
    const auto r = ds.row(i);
    ds.row_norms[i] = std::sqrt(k.nrm2sq(r.val.data(), r.val.size()));
  }
}

void normalize_rows(Dataset& ds) {
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < ds.n; ++i) {
    if (ds.row_norms[i] <= 0.0) continue;
    const double inv = 1.0 / ds.row_norms[i];
    k.scal(inv, ds.values.data() + ds.offsets[i],
           ds.offsets[i + 1] - ds.offsets[i]);
  }
  compute_row_norms(ds);
}

}  // namespace probsarah
