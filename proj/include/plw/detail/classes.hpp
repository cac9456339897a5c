#pragma once

// Half-table form of a symmetric channel: class (a, b) with a >= b stands for
// the conjugate outputs (a, b) and (b, a). An LR-1 output (c, c) is the class
// (c/2, c/2).

#include <cstddef>
#include <vector>

#include "plw/channel.hpp"

namespace plw::detail {

struct Cls {
  double a = 0;
  double b = 0;
};

double cls_info(const Cls& c);
double cls_z(const Cls& c);
std::size_t cls_count(const Cls& c);

std::vector<Cls> canonical_classes(std::vector<Cls> in);
void normalize(std::vector<Cls>& v);
std::vector<Cls> classes_of(const BmsChannel& ch);
BmsChannel channel_of(std::vector<Cls> classes);

std::vector<Cls> degrade_classes(const std::vector<Cls>& v, std::size_t mu);
std::vector<Cls> upgrade_classes(const std::vector<Cls>& v, std::size_t mu);
std::vector<Cls> minus_classes(const std::vector<Cls>& v);
std::vector<Cls> plus_classes(const std::vector<Cls>& v);

double classes_z(const std::vector<Cls>& v);
double classes_info(const std::vector<Cls>& v);

}  // namespace plw::detail
