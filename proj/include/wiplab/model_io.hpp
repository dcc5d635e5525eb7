#pragma once

// JSON schema for model definitions:
//
//   {"kind": "finite", "P": [[...], ...], "f": [...], "x0": 0}
//   {"kind": "ar", "alpha": 0.5, "x0": 0.0}
//   {"kind": "recursion", "atoms": [{"a": 0.3, "b": -1, "w": 0.25}, ...], "x0": 0.0}

#include <fstream>
#include <string>

#include "json.hpp"

#include "wiplab/chains.hpp"

namespace wiplab {

using json = nlohmann::json;

inline ChainModel model_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind")) {
    throw PreconditionError("model: object with a \"kind\" field expected");
  }
  const auto kind = doc.at("kind").get<std::string>();
  try {
    if (kind == "finite") {
      const auto rows = doc.at("P").get<std::vector<std::vector<double>>>();
      const auto f = doc.at("f").get<std::vector<double>>();
      const auto n = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd P(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        require(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) == n,
                "model.P: row " + std::to_string(i) + " has the wrong length");
        for (Eigen::Index j = 0; j < n; ++j) P(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
      Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
      return FiniteChain(P, fv, doc.value("x0", 0));
    }
    if (kind == "ar") {
      return ArBernoulli(doc.at("alpha").get<double>(), doc.value("x0", 0.0));
    }
    if (kind == "recursion") {
      std::vector<RecursionAtom> atoms;
      for (const auto& a : doc.at("atoms")) {
        atoms.push_back({a.at("a").get<double>(), a.at("b").get<double>(), a.at("w").get<double>()});
      }
      return StochasticRecursion(std::move(atoms), doc.value("x0", 0.0));
    }
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("model: ") + e.what());
  }
  throw PreconditionError("model.kind: unknown kind \"" + kind + "\" (expected finite, ar or recursion)");
}

inline json model_to_json(const ChainModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FiniteChain>) {
          json rows = json::array();
          for (Eigen::Index i = 0; i < m.P().rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.P().cols(); ++j) row.push_back(m.P()(i, j));
            rows.push_back(row);
          }
          json f = json::array();
          for (Eigen::Index i = 0; i < m.f().size(); ++i) f.push_back(m.f()[i]);
          return {{"kind", "finite"}, {"P", rows}, {"f", f}, {"x0", m.x0()}};
        } else if constexpr (std::is_same_v<M, ArBernoulli>) {
          return {{"kind", "ar"}, {"alpha", m.alpha()}, {"x0", m.x0()}};
        } else {
          json atoms = json::array();
          for (const auto& a : m.atoms()) atoms.push_back({{"a", a.a}, {"b", a.b}, {"w", a.weight}});
          const auto& h = m.hypotheses();
          return {{"kind", "recursion"},
                  {"atoms", atoms},
                  {"x0", m.x0()},
                  {"hypotheses", {{"H1", h.h1}, {"H1_p", h.h1_p}, {"H2", h.h2}, {"H3", h.h3}}}};
        }
      },
      model);
}

inline ChainModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open model file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw PreconditionError("model file " + path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace wiplab
