// Thin typed client over the service's HTTP/JSON contract.

import type { ClassifyResponse, HealthResponse, LabelPrompt, PieceResponse, SearchResponse, ServiceError } from './types'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiError extends Error {
  constructor(
    public code: string,
    public detail: string,
    public status: number,
  ) {
    super(`${code}: ${detail}`)
  }
}

async function parse<T>(response: Response): Promise<T> {
  const payload = await response.json()
  if (!response.ok) {
    const err = (payload as ServiceError).error ?? { code: `http_${response.status}`, detail: '' }
    throw new ApiError(err.code, err.detail, response.status)
  }
  return payload as T
}

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, '')
  }

  async search(query: string, k: number): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: query, k: String(k) })
    return parse(await this.fetchImpl(`${this.baseUrl}/search?${params}`))
  }

  async classify(abc: string, labels: LabelPrompt[]): Promise<ClassifyResponse> {
    return parse(
      await this.fetchImpl(`${this.baseUrl}/classify`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ abc, labels }),
      }),
    )
  }

  async piece(sourceId: string): Promise<PieceResponse> {
    return parse(await this.fetchImpl(`${this.baseUrl}/piece/${encodeURIComponent(sourceId)}`))
  }

  async health(): Promise<HealthResponse> {
    return parse(await this.fetchImpl(`${this.baseUrl}/health`))
  }
}
