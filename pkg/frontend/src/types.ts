// Payload shapes of the retrieval service; the UI never computes similarity
// itself, it only renders these values.

export type SearchHit = {
  source_id: string
  score: number
  title: string | null
  snippet: string
}

export type SearchResponse = {
  query: string
  k: number
  results: SearchHit[]
}

export type LabelPrompt = {
  label: string
  prompt: string
}

export type LabelScore = {
  label: string
  score: number
}

export type ClassifyResponse = {
  label: string
  tie: boolean
  scores: LabelScore[]
}

export type PieceResponse = {
  source_id: string
  title: string | null
  labels: Record<string, string>
  abc: string
}

export type HealthResponse = {
  status: string
  version: string
  config: Record<string, unknown>
}

export type ServiceError = {
  error: { code: string; detail: string }
}
