#ifndef HARMONIC_GAMES_H
#define HARMONIC_GAMES_H

/* Generated by cbindgen from harmonic-games-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum HgStatus {
  HG_STATUS_OK = 0,
  HG_STATUS_NULL_POINTER = 1,
  HG_STATUS_INVALID_UTF8 = 2,
  HG_STATUS_PARSE_ERROR = 3,
  HG_STATUS_INVALID_ARGUMENT = 4,
  HG_STATUS_NOT_HARMONIC = 5,
  HG_STATUS_NUMERICAL_ERROR = 6,
  HG_STATUS_DIVERGED = 7,
  HG_STATUS_INTERNAL_PANIC = 8,
} HgStatus;

// Opaque game handle.
typedef struct HgGame HgGame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread.  The pointer
// stays valid until the next failing call on the same thread.
const char *hg_last_error_message(void);

// Parse a game document (`{"players": N, "actions": [...], "payoffs":
// [...]}`) into a new handle.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out_game` a valid
// pointer.
enum HgStatus hg_game_from_json(const char *json, struct HgGame **out_game);

// Release a game handle (null is a no-op).
//
// # Safety
// `game` must be null or a pointer returned by this library.
void hg_game_free(struct HgGame *game);

// Release a string returned by this library (null is a no-op).
//
// # Safety
// `text` must be null or a string pointer returned by this library.
void hg_string_free(char *text);

// Number of players, or 0 for a null handle.
//
// # Safety
// `game` must be null or a valid handle.
uint32_t hg_game_num_players(const struct HgGame *game);

// Copy per-player action counts into `buf` (length `len` >= num_players).
//
// # Safety
// `game` must be a valid handle and `buf` must point to `len` writable
// entries.
enum HgStatus hg_game_action_counts(const struct HgGame *game, uint32_t *buf, size_t len);

// Serialize the game back to its JSON document.
//
// # Safety
// `game` must be a valid handle and `out_json` a valid pointer; the result
// must be released with [`hg_string_free`].
enum HgStatus hg_game_to_json(const struct HgGame *game, char **out_json);

// Largest unilateral deviation gain at a mixed profile, passed as the
// concatenation of per-player probability blocks (length = sum of action
// counts).
//
// # Safety
// `game` must be a valid handle, `profile` must hold `len` doubles, and
// `out_gap` must be a valid pointer.
enum HgStatus hg_nash_gap(const struct HgGame *game,
                          const double *profile,
                          size_t len,
                          double *out_gap);

// Full analysis report as JSON: harmonic structure (or absence), uniform
// flag, Lipschitz moduli, and admissible step sizes.
//
// # Safety
// `game` must be a valid handle and `out_json` a valid pointer; release
// the result with [`hg_string_free`].
enum HgStatus hg_analyze_json(const struct HgGame *game, char **out_json);

// Sample a harmonic game.  `shape` holds `num_players` action counts;
// `uniform_measure` nonzero uses the all-ones measure, zero draws random
// canonical weights from the seed.  On success returns the game handle
// plus the structure JSON.
//
// # Safety
// `shape` must hold `num_players` entries; `out_game` and `out_structure`
// must be valid pointers.
enum HgStatus hg_generate_harmonic(const uint32_t *shape,
                                   size_t num_players,
                                   int32_t uniform_measure,
                                   uint64_t seed,
                                   struct HgGame **out_game,
                                   char **out_structure);

// Run a discrete experiment from a [`DiscreteRunConfig`] JSON document and
// return the summary JSON.
//
// # Safety
// `game` must be a valid handle, `config_json` a valid string, and
// `out_summary` a valid pointer; release the result with
// [`hg_string_free`].
enum HgStatus hg_run_discrete(const struct HgGame *game,
                              const char *config_json,
                              char **out_summary);

// Integrate a continuous flow from a [`FlowRunConfig`] JSON document and
// return the summary JSON.
//
// # Safety
// Same contracts as [`hg_run_discrete`].
enum HgStatus hg_integrate_flow(const struct HgGame *game,
                                const char *config_json,
                                char **out_summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARMONIC_GAMES_H */
