// Pure view-model builders: everything displayable is derived here from the
// service payloads and unit-tested without a DOM. Score strings come
// verbatim from the payload values, formatted to 4 decimals.

import { formatScore, snippetLines } from './format'
import type { ClassifyResponse, SearchResponse } from './types'

export type SearchRow = {
  rank: number
  sourceId: string
  scoreText: string
  title: string | null
  snippet: string[]
  querySeed: string // text offered as the next query when clicked
}

export type SearchView =
  | { kind: 'empty'; message: string }
  | { kind: 'results'; rows: SearchRow[] }

export function renderSearch(payload: SearchResponse): SearchView {
  if (payload.results.length === 0) {
    return { kind: 'empty', message: `no matches for "${payload.query}"` }
  }
  return {
    kind: 'results',
    rows: payload.results.map((hit, i) => ({
      rank: i + 1,
      sourceId: hit.source_id,
      scoreText: formatScore(hit.score),
      title: hit.title,
      snippet: snippetLines(hit.snippet),
      querySeed: hit.title ?? hit.source_id,
    })),
  }
}

export type ClassifyBar = {
  label: string
  scoreText: string
  fraction: number // bar length in [0, 1] relative to the top score
  isArgmax: boolean
  tied: boolean
}

export type ClassifyView = {
  winner: string
  tie: boolean
  bars: ClassifyBar[]
}

export function renderClassify(payload: ClassifyResponse): ClassifyView {
  const scores = payload.scores.map((s) => s.score)
  const top = Math.max(...scores)
  const bottom = Math.min(...scores)
  const span = top - bottom
  return {
    winner: payload.label,
    tie: payload.tie,
    bars: payload.scores.map((row) => ({
      label: row.label,
      scoreText: formatScore(row.score),
      fraction: span > 0 ? (row.score - bottom) / span : 1,
      isArgmax: row.label === payload.label,
      tied: payload.tie && row.score === top,
    })),
  }
}
