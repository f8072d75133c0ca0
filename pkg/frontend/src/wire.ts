/**
 * Wire contract shared with the engine: chart specs, callouts, facts,
 * hierarchies, carts, narratives, recommendations, and story renders.
 *
 * Every payload a widget emits is validated against these schemas before it
 * leaves the client, and every server response is parsed through them, so a
 * contract drift fails loudly on this side of the HTTP boundary.
 */

import { z } from 'zod';

export const CHART_TYPES = [
  'scatterplot',
  'bar',
  'line',
  'stackedBar',
  'pieDonut',
  'sunburst',
] as const;
export type ChartType = (typeof CHART_TYPES)[number];

export const ChartSpecSchema = z
  .object({
    id: z.string().nullish(),
    chartType: z.enum(CHART_TYPES),
    datasetId: z.string(),
    xAttr: z.string().nullish(),
    yAttr: z.string().nullish(),
    colorAttr: z.string().nullish(),
    identityAttr: z.string().nullish(),
    tooltipAttrs: z.array(z.string()).default([]),
    hierarchyAttrs: z.array(z.string()).default([]),
    title: z.string().default(''),
  })
  .strict();
export type ChartSpec = z.infer<typeof ChartSpecSchema>;

const numericRange = z
  .tuple([z.number(), z.number()])
  .refine(([lo, hi]) => lo <= hi, 'range must be ordered low <= high');
const axisValue = z.union([z.number(), z.string()]);
const axisRange = z.tuple([axisValue, axisValue]);
const nonEmpty = <T extends z.ZodTypeAny>(inner: T) => z.array(inner).min(1);

export const CALLOUT_KINDS = [
  'brush2d',
  'brush1dX',
  'discreteClick',
  'legendClick',
  'addTrendline',
  'timeframeBrush',
  'lineSelect',
  'temporalPointClick',
  'segmentSelect',
  'sunburstClick',
  'sunburstChain',
] as const;
export type CalloutKind = (typeof CALLOUT_KINDS)[number];

/** Legal interaction kinds per chart family (the taxonomy's gesture half). */
export const LEGAL_CALLOUTS: Record<ChartType, readonly CalloutKind[]> = {
  scatterplot: ['brush2d', 'discreteClick', 'legendClick', 'addTrendline'],
  bar: ['discreteClick', 'legendClick', 'brush1dX'],
  line: ['timeframeBrush', 'lineSelect', 'temporalPointClick'],
  stackedBar: ['legendClick', 'segmentSelect'],
  pieDonut: ['discreteClick'],
  sunburst: ['sunburstClick', 'sunburstChain'],
};

const calloutVariant = <K extends CalloutKind, P extends z.ZodTypeAny>(kind: K, params: P) =>
  z.object({ chartId: z.string().min(1), kind: z.literal(kind), params }).strict();

export const CalloutSchema = z.discriminatedUnion('kind', [
  calloutVariant(
    'brush2d',
    z
      .object({
        xCoordRange: numericRange.optional(),
        yCoordRange: numericRange.optional(),
        xValueRange: numericRange,
        yValueRange: numericRange,
      })
      .strict(),
  ),
  calloutVariant(
    'brush1dX',
    z.object({ xCoordRange: numericRange.optional(), xValueRange: axisRange }).strict(),
  ),
  calloutVariant('discreteClick', z.object({ keys: nonEmpty(axisValue) }).strict()),
  calloutVariant('legendClick', z.object({ categories: nonEmpty(axisValue) }).strict()),
  calloutVariant('addTrendline', z.object({}).strict()),
  calloutVariant(
    'timeframeBrush',
    z.object({ xCoordRange: numericRange.optional(), xValueRange: axisRange }).strict(),
  ),
  calloutVariant('lineSelect', z.object({ categories: nonEmpty(axisValue) }).strict()),
  calloutVariant('temporalPointClick', z.object({ keys: nonEmpty(axisValue) }).strict()),
  calloutVariant(
    'segmentSelect',
    z.object({ pairs: nonEmpty(z.tuple([axisValue, axisValue])) }).strict(),
  ),
  calloutVariant('sunburstClick', z.object({ paths: nonEmpty(nonEmpty(axisValue)) }).strict()),
  calloutVariant('sunburstChain', z.object({ path: nonEmpty(axisValue) }).strict()),
]);
export type Callout = z.infer<typeof CalloutSchema>;

export const FactSchema = z.object({
  id: z.string().nullable(),
  factType: z.string(),
  attributes: z.array(z.string()),
  payload: z.record(z.string(), z.union([z.number(), z.string()])),
  templateText: z.string(),
  score: z.number(),
  sourceNode: z.string().nullable(),
  provenance: z.record(z.string(), z.unknown()).nullable(),
});
export type Fact = z.infer<typeof FactSchema>;

const StatRowSchema = z.object({
  count: z.number(),
  mean: z.number(),
  median: z.number(),
  min: z.number(),
  max: z.number(),
  std: z.number(),
});

export const StatTableSchema = z.object({
  attributes: z.array(
    z.object({ attribute: z.string(), selection: StatRowSchema, global: StatRowSchema }),
  ),
});
export type StatTable = z.infer<typeof StatTableSchema>;

export const HierarchySchema = z.object({
  statTable: StatTableSchema,
  factTypeGroups: z.array(
    z.object({
      factType: z.string(),
      attributeGroups: z.array(
        z.object({ attribute: z.string(), facts: z.array(FactSchema) }),
      ),
    }),
  ),
});
export type Hierarchy = z.infer<typeof HierarchySchema>;

export const TextCartSchema = z.object({
  groups: z.array(z.object({ sourceNode: z.string(), facts: z.array(FactSchema) })),
  recommendations: z.array(z.unknown()),
  stale: z.boolean(),
});
export type TextCart = z.infer<typeof TextCartSchema>;

export const NarrativeSchema = z.object({
  text: z.string(),
  anchoredFactIds: z.array(z.string().nullable()),
  generatorId: z.string(),
  accepted: z.enum(['pending', 'accepted', 'rejected']),
});
export type Narrative = z.infer<typeof NarrativeSchema>;

export const RecommendationSchema = z.object({
  rationale: z.string(),
  plan: z.object({
    sourceDataset: z.string(),
    steps: z.array(z.record(z.string(), z.unknown())),
  }),
  spec: ChartSpecSchema,
  valid: z.boolean(),
  violations: z.array(z.string()),
});
export type Recommendation = z.infer<typeof RecommendationSchema>;

export const RecommendResultSchema = z.object({
  recommendations: z.array(RecommendationSchema),
  reason: z.string().optional(),
});

export const StoryRenderSchema = z.object({
  format: z.enum(['continuous', 'scrollytelling', 'stepper']),
  navigation: z.enum(['continuous', 'scrolly', 'stepper']),
  sections: z.array(
    z.object({
      textNode: z.string(),
      html: z.string(),
      charts: z.array(
        z.object({
          nodeId: z.string(),
          chartSpec: ChartSpecSchema.nullable(),
          datasetId: z.string().nullable(),
          calloutReplay: z.record(z.string(), z.unknown()).nullable(),
        }),
      ),
      factAnchors: z.array(z.string()),
    }),
  ),
});
export type StoryRender = z.infer<typeof StoryRenderSchema>;

export const DatasetSummarySchema = z.object({
  id: z.string(),
  name: z.string(),
  columns: z.array(
    z.object({
      name: z.string(),
      attrType: z.enum(['quantitative', 'categorical', 'temporal']),
      distinctCount: z.number(),
      sampleValues: z.array(z.unknown()),
      min: z.number().nullish(),
      max: z.number().nullish(),
    }),
  ),
});
export type DatasetSummary = z.infer<typeof DatasetSummarySchema>;

/** Parse-or-throw with a readable message for contract failures. */
export function parseWire<T>(schema: z.ZodType<T>, value: unknown, label: string): T {
  const result = schema.safeParse(value);
  if (!result.success) {
    throw new Error(`${label} violates the wire contract: ${result.error.message}`);
  }
  return result.data;
}
