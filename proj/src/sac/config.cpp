#include "smoothrace/sac/config.hpp"

#include "smoothrace/error.hpp"

namespace smoothrace::sac {

void SACConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("sac.gamma", "must lie in (0,1)");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("sac.tau", "must lie in (0,1)");
  if (!(alpha_init > 0.0)) throw ConfigError("sac.alpha_init", "must be positive");
  if (!(lr >= 0.0)) throw ConfigError("sac.lr", "must be non-negative");
  if (batch_size <= 0) throw ConfigError("sac.batch_size", "must be positive");
  if (global_buffer <= 0) throw ConfigError("sac.global_buffer", "must be positive");
  if (batch_size > global_buffer) throw ConfigError("sac.batch_size", "must not exceed sac.global_buffer");
  if (local_buffer <= 0) throw ConfigError("sac.local_buffer", "must be positive");
  if (workers <= 0) throw ConfigError("sac.workers", "must be positive");
  if (!(updates_per_step >= 0.0)) throw ConfigError("sac.updates_per_step", "must be non-negative");
  if (warmup_steps < 0) throw ConfigError("sac.warmup_steps", "must be non-negative");
}

}  // namespace smoothrace::sac
