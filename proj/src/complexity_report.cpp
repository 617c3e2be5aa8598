#include "trajgan/complexity_report.hpp"

#include <cstdio>

namespace trajgan {

namespace {

std::int64_t count_named(std::vector<NamedParam> params) {
  std::int64_t n = 0;
  for (const NamedParam& p : params) {
    if (!p.tensor.node()) continue;
    std::int64_t m = 1;
    for (std::int64_t s : p.tensor.shape()) m *= s;
    n += m;
  }
  return n;
}

}  // namespace

double complexity(const ComplexityRecord& record) {
  if (record.parameter_count < 0 || record.train_seconds < 0 ||
      record.tune_seconds < 0 || record.alpha < 0 || record.beta < 0)
    throw ConfigError("complexity record fields must be non-negative");
  return record.alpha * double(record.parameter_count) *
             record.train_seconds +
         record.beta * record.tune_seconds;
}

std::int64_t count_parameters(CycleGanModel& model) {
  return count_named(model.g_st.named()) + count_named(model.g_ts.named()) +
         count_named(model.d_s.named()) + count_named(model.d_t.named());
}

std::string render_complexity_csv(const ComplexityRecord& record) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                static_cast<long long>(record.parameter_count),
                record.train_seconds, record.tune_seconds, record.alpha,
                record.beta, complexity(record));
  return std::string(
             "parameters,train_seconds,tune_seconds,alpha,beta,complexity\n") +
         buf;
}

}  // namespace trajgan
