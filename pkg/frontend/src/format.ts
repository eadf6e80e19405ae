// Display formatting. Scores are rendered verbatim from the service payload
// at 4 decimal places; nothing is recomputed client-side.

export function formatScore(score: number): string {
  return score.toFixed(4)
}

export function snippetLines(snippet: string, maxLines = 8): string[] {
  const lines = snippet.replace(/\r\n/g, '\n').split('\n')
  if (lines.length > 0 && lines[lines.length - 1] === '') lines.pop()
  if (lines.length <= maxLines) return lines
  return [...lines.slice(0, maxLines), '…']
}
