import { z } from "zod";

export const FIGURE_KINDS = [
  "decay",
  "spectrum",
  "snapshot",
  "majorant",
  "sweep_heatmap",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export const FigureSpecSchema = z.object({
  kind: z.enum(FIGURE_KINDS),
  inputs: z.record(z.string(), z.string()),
  output: z.string(),
  options: z
    .object({
      title: z.string().optional(),
      xlabel: z.string().optional(),
      ylabel: z.string().optional(),
      column: z.string().optional(),
      columns: z.array(z.string()).optional(),
      x_axis: z.string().optional(),
      y_axis: z.string().optional(),
      value: z.string().optional(),
      beta: z.number().optional(),
    })
    .default({}),
});

export type FigureSpec = z.infer<typeof FigureSpecSchema>;

/** Verdict JSON fragment carrying fitted power laws. */
export const FitSchema = z.object({
  series: z.string(),
  exponent: z.number(),
  intercept: z.number(),
  window: z.array(z.number()).length(2),
});

export const VerdictSchema = z
  .object({ fits: z.array(FitSchema).default([]) })
  .passthrough();

export const SpectralReportSchema = z
  .object({
    v: z.number(),
    eigenvalues: z.array(z.number()),
    continuum_edge: z.number(),
    u2_passed: z.boolean(),
    resonance: z
      .object({ verdict: z.string(), wronskian: z.number() })
      .nullable(),
  })
  .passthrough();

export type SpectralReport = z.infer<typeof SpectralReportSchema>;
export type Fit = z.infer<typeof FitSchema>;
