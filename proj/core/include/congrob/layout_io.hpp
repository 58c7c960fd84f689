#pragma once

#include <string>

#include "congrob/layout.hpp"
#include "congrob/perturbation.hpp"

namespace congrob {

// Layout JSON: {grid:{W,H}, cells:[{w,h,macro}], coords:[[x,y],...],
// nets:[[{cell,ox,oy},...],...]}. Reals carry 17 significant digits so a
// round trip recovers the exact double.
void write_layout_json(const std::string& path, const Layout& l);
Layout read_layout_json(const std::string& path);

// Perturbation JSON: {eps0, n, rows:[{cell,dx,dy},...]} listing moved cells only.
void write_perturbation_json(const std::string& path, const Perturbation& p);
Perturbation read_perturbation_json(const std::string& path);

std::string format_real(double v);  // fixed 17-significant-digit form

}  // namespace congrob
