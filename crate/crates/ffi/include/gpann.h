#ifndef GPANN_H
#define GPANN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum GpannStatus {
  GPANN_STATUS_OK = 0,
  GPANN_STATUS_NULL_POINTER = 1,
  GPANN_STATUS_INVALID_UTF8 = 2,
  GPANN_STATUS_INVALID_ARGUMENT = 3,
  GPANN_STATUS_INVALID_CONFIG = 4,
  GPANN_STATUS_IO = 5,
  GPANN_STATUS_PARSE = 6,
  GPANN_STATUS_DATA = 7,
  GPANN_STATUS_INTERNAL = 8,
  GPANN_STATUS_PANIC = 9,
} GpannStatus;

// Evolution parameters.
typedef struct GpannConfig GpannConfig;

// A loaded dataset.
typedef struct GpannDataset GpannDataset;

// A decoded feedforward network.
typedef struct GpannNetwork GpannNetwork;

// The outcome of one run.
typedef struct GpannReport GpannReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string, statically allocated.
const char *gpann_version(void);

// Message describing the last failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *gpann_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void gpann_string_free(char *s);

// Loads a CSV file with a header row and the class in the last column,
// min-max normalizing the features.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum GpannStatus gpann_dataset_load_csv(const char *path, struct GpannDataset **out);

// Same as [`gpann_dataset_load_csv`] but reads CSV text from memory.
//
// # Safety
// `name` and `text` must be NUL-terminated strings and `out` a valid pointer.
enum GpannStatus gpann_dataset_parse_csv(const char *name,
                                         const char *text,
                                         struct GpannDataset **out);

// Splits `ds` into a training and a test part. `test_fraction` must be in
// (0, 1).
//
// # Safety
// `ds` must be a live dataset handle and both out pointers valid.
enum GpannStatus gpann_dataset_split(const struct GpannDataset *ds,
                                     double test_fraction,
                                     uint64_t seed,
                                     struct GpannDataset **train_out,
                                     struct GpannDataset **test_out);

// Number of rows, or 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
uintptr_t gpann_dataset_len(const struct GpannDataset *ds);

// # Safety
// `ds` must be null or a live dataset handle.
uintptr_t gpann_dataset_input_width(const struct GpannDataset *ds);

// # Safety
// `ds` must be null or a live dataset handle.
uintptr_t gpann_dataset_target_width(const struct GpannDataset *ds);

// # Safety
// `ds` must be null or a handle not yet freed.
void gpann_dataset_free(struct GpannDataset *ds);

// Default parameters. Never null.
struct GpannConfig *gpann_config_new(void);

// Parses parameters from TOML text. Missing keys keep their defaults.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum GpannStatus gpann_config_from_toml(const char *text, struct GpannConfig **out);

// # Safety
// `cfg` must be a live config handle.
enum GpannStatus gpann_config_set_seed(struct GpannConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be a live config handle.
enum GpannStatus gpann_config_set_effort_budget(struct GpannConfig *cfg, uint64_t budget);

// # Safety
// `cfg` must be a live config handle.
enum GpannStatus gpann_config_set_population_size(struct GpannConfig *cfg, uintptr_t size);

// Checks the parameters without running anything.
//
// # Safety
// `cfg` must be a live config handle.
enum GpannStatus gpann_config_validate(const struct GpannConfig *cfg);

// # Safety
// `cfg` must be null or a handle not yet freed.
void gpann_config_free(struct GpannConfig *cfg);

// Evolves a network on `train`. `test` may be null.
//
// # Safety
// `cfg` and `train` must be live handles, `test` null or live, `out` valid.
enum GpannStatus gpann_run(const struct GpannConfig *cfg,
                           const struct GpannDataset *train,
                           const struct GpannDataset *test,
                           struct GpannReport **out);

// Test-set accuracy, or NaN when no test set was given or `r` is null.
//
// # Safety
// `r` must be null or a live report handle.
double gpann_report_test_accuracy(const struct GpannReport *r);

// # Safety
// `r` must be null or a live report handle.
double gpann_report_train_fitness(const struct GpannReport *r);

// Training-set evaluations spent.
//
// # Safety
// `r` must be null or a live report handle.
uint64_t gpann_report_effort_used(const struct GpannReport *r);

// # Safety
// `r` must be null or a live report handle.
uintptr_t gpann_report_neuron_count(const struct GpannReport *r);

// The full report as JSON. Free with [`gpann_string_free`].
//
// # Safety
// `r` must be null or a live report handle.
char *gpann_report_to_json(const struct GpannReport *r);

// Copies out the best network of a run.
//
// # Safety
// `r` must be a live report handle and `out` a valid pointer.
enum GpannStatus gpann_report_network(const struct GpannReport *r, struct GpannNetwork **out);

// # Safety
// `r` must be null or a handle not yet freed.
void gpann_report_free(struct GpannReport *r);

// Decodes an s-expression genotype such as `(ANN (N1 IN0 0.5))`.
//
// # Safety
// `tree` must be a NUL-terminated string and `out` a valid pointer.
enum GpannStatus gpann_network_from_tree(const char *tree,
                                         uintptr_t input_count,
                                         struct GpannNetwork **out);

// Reads a network previously written by [`gpann_network_to_json`].
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum GpannStatus gpann_network_from_json(const char *json, struct GpannNetwork **out);

// # Safety
// `net` must be null or a live network handle.
uintptr_t gpann_network_input_count(const struct GpannNetwork *net);

// # Safety
// `net` must be null or a live network handle.
uintptr_t gpann_network_output_count(const struct GpannNetwork *net);

// Runs one pattern through the network. `input` holds `input_len` values
// and `output` has room for `output_len` values; both lengths must match
// the network exactly.
//
// # Safety
// `net` must be a live handle; `input` and `output` must point to arrays of
// the given lengths.
enum GpannStatus gpann_network_forward(const struct GpannNetwork *net,
                                       const double *input,
                                       uintptr_t input_len,
                                       double *output,
                                       uintptr_t output_len);

// Graphviz rendering. Free with [`gpann_string_free`].
//
// # Safety
// `net` must be null or a live network handle.
char *gpann_network_to_dot(const struct GpannNetwork *net);

// JSON rendering. Free with [`gpann_string_free`].
//
// # Safety
// `net` must be null or a live network handle.
char *gpann_network_to_json(const struct GpannNetwork *net);

// # Safety
// `net` must be null or a handle not yet freed.
void gpann_network_free(struct GpannNetwork *net);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPANN_H */
