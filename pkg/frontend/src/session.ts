// Client-side session state. At most one logical in-flight request per
// panel: every dispatch gets a sequence number and any response bearing a
// stale number is discarded, so a slow early response can never overwrite a
// newer one.

import type { SearchResponse } from './types'

export type HistoryEntry = {
  query: string
  k: number
  at: number // epoch millis
}

export class QuerySession {
  query = ''
  k = 10
  lastResults: SearchResponse | null = null
  readonly history: readonly HistoryEntry[] = []
  private seq = 0
  private applied = 0

  nextRequest(query: string, k: number): number {
    if (k < 1) throw new Error('k must be >= 1')
    this.query = query
    this.k = k
    ;(this.history as HistoryEntry[]).push({ query, k, at: Date.now() })
    this.seq += 1
    return this.seq
  }

  /** Returns true when the response was applied, false when stale. */
  applyResponse(token: number, results: SearchResponse): boolean {
    if (token < this.seq || token <= this.applied) {
      return false
    }
    this.applied = token
    this.lastResults = results
    return true
  }
}

export async function runSearch(
  session: QuerySession,
  doSearch: (query: string, k: number) => Promise<SearchResponse>,
  query: string,
  k: number,
): Promise<SearchResponse | null> {
  const token = session.nextRequest(query, k)
  const response = await doSearch(query, k)
  return session.applyResponse(token, response) ? response : null
}
