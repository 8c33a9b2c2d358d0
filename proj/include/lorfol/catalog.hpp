#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lorfol/dynamics.hpp"
#include "lorfol/foliation.hpp"
#include "lorfol/metric.hpp"

namespace lorfol {

enum class EntryKind { FormPair, SingleForm, NullMetric, Suspension };

std::string to_string(EntryKind k);

struct CatalogEntry {
    std::string name;
    EntryKind kind = EntryKind::FormPair;
    std::string note;  // where the object comes from / what it exercises
    std::map<std::string, double> defaults;
};

struct CatalogOverrides {
    std::map<std::string, double> values;  // named parameters, e.g. lambda
    std::optional<std::string> speed;      // suspension local speed (DSL)
};

struct CatalogObject {
    CatalogEntry entry;
    std::optional<FormPair> pair;
    std::optional<Form1> single_form;
    std::optional<NullMetric> metric;
    std::optional<SuspensionFlow> flow;
    GridSpec default_grid;  // verification domain suited to the entry
    std::vector<std::string> warnings;
};

const std::vector<CatalogEntry>& catalog_list();

/// Constructs a named entry; unknown names and unknown override keys error.
CatalogObject catalog_get(const std::string& name, const CatalogOverrides& ov = {});

/// Entry-appropriate verification residual: Frobenius + transverse volume for
/// pairs, integrability for single forms, deck invariance for metrics,
/// cocycle additivity for suspensions.
double verify_entry(const CatalogObject& obj, ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace lorfol
