/* Region hook interface inserted by the instrumenter. */
#ifndef PDT_HOOKS_H
#define PDT_HOOKS_H

#ifdef __cplusplus
extern "C" {
#endif

void pdt_region_begin(int region_id);
void pdt_region_end(int region_id);
int pdt_region_threads(int region_id);

#ifdef __cplusplus
}
#endif

#endif /* PDT_HOOKS_H */
