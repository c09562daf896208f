#include <stdio.h>
#include <string.h>

#include "cir.h"

#define CHECK(cond)                                                        \
  do {                                                                     \
    if (!(cond)) {                                                         \
      const char *err = cir_last_error();                                  \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, err ? err : ""); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  double pmf[4];
  CHECK(cir_pmf_materialize(CIR_PMF_KIND_GEOMETRIC, 1.0, 4, pmf) == CIR_STATUS_OK);
  CHECK(pmf[0] == 1.0 && pmf[3] == 0.0);

  CirDataset *ds = NULL;
  CHECK(cir_dataset_synthetic(10, 20, 3, 0.5, 7, &ds) == CIR_STATUS_OK);

  CirStream *stream = NULL;
  CHECK(cir_stream_slot(ds, 5, 10, 1, &stream) == CIR_STATUS_OK);
  size_t n = 0, total = 0;
  CHECK(cir_stream_len(stream, &n) == CIR_STATUS_OK && n == 5);
  size_t buf[200];
  for (size_t i = 0; i < n; i++) {
    size_t written = 0;
    CHECK(cir_stream_experience(stream, i, buf, 200, &written) == CIR_STATUS_OK);
    total += written;
  }
  CHECK(total == 200);

  CirStream *bad = NULL;
  CHECK(cir_stream_slot(ds, 3, 2, 0, &bad) == CIR_STATUS_INVALID_CONFIG);
  CHECK(cir_last_error() != NULL && strlen(cir_last_error()) > 0);

  CirBuffer *buffer = NULL;
  CHECK(cir_buffer_new(CIR_POLICY_RESERVOIR, 8, 3, &buffer) == CIR_STATUS_OK);
  size_t labels[200];
  for (size_t i = 0; i < 200; i++) {
    buf[i] = i;
    labels[i] = i / 20;
  }
  CHECK(cir_buffer_update(buffer, buf, labels, 200) == CIR_STATUS_OK);
  size_t len = 0;
  CHECK(cir_buffer_len(buffer, &len) == CIR_STATUS_OK && len == 8);

  char *json = NULL;
  CHECK(cir_stream_manifest_json(stream, &json) == CIR_STATUS_OK && json[0] == '{');
  cir_string_free(json);

  cir_buffer_free(buffer);
  cir_stream_free(stream);
  cir_dataset_free(ds);
  puts("ok");
  return 0;
}
