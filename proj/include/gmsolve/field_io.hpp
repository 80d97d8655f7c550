#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "gmsolve/field.hpp"

namespace gmsolve {

/// CSV with header `x,y,class,value`: one row per lattice node in row-major
/// order, then one row per curved-boundary point with class `boundary_point`.
/// Exterior nodes carry `nan`.
void write_field_csv(const ScalarField& field, std::ostream& out);
/// Rebuilds the grid from the lattice size and coordinates, then loads values.
ScalarField read_field_csv(std::istream& in);

/// `{shape, n, h, values, boundary_values}`; NaN is written as null.
nlohmann::json field_to_json(const ScalarField& field);
ScalarField field_from_json(const nlohmann::json& j);

void save_field_csv(const ScalarField& field, const std::string& path);
ScalarField load_field_csv(const std::string& path);

}  // namespace gmsolve
