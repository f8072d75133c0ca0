import { readFileSync } from 'node:fs';

export function fixture<T = unknown>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, 'utf-8')) as T;
}

/** Rows mirroring the dataset the fixtures were recorded against. */
export const COUNTRY_ROWS = [
  { country: 'Algeria', continent: 'Africa', year: '2007', lifeExp: 72.3, gdpPercap: 6223.4 },
  { country: 'Angola', continent: 'Africa', year: '2007', lifeExp: 42.7, gdpPercap: 4797.2 },
  { country: 'Benin', continent: 'Africa', year: '2007', lifeExp: 56.7, gdpPercap: 1441.3 },
  { country: 'Gabon', continent: 'Africa', year: '2007', lifeExp: 56.7, gdpPercap: 13206.5 },
  { country: 'Chad', continent: 'Africa', year: '2007', lifeExp: 50.7, gdpPercap: 1704.1 },
  { country: 'Chile', continent: 'Americas', year: '2007', lifeExp: 78.6, gdpPercap: 13171.6 },
  { country: 'Canada', continent: 'Americas', year: '2007', lifeExp: 80.7, gdpPercap: 36319.2 },
  { country: 'China', continent: 'Asia', year: '2007', lifeExp: 73.0, gdpPercap: 4959.1 },
  { country: 'Japan', continent: 'Asia', year: '2007', lifeExp: 82.6, gdpPercap: 31656.1 },
  { country: 'France', continent: 'Europe', year: '2007', lifeExp: 80.7, gdpPercap: 30470.0 },
  { country: 'Germany', continent: 'Europe', year: '2007', lifeExp: 79.4, gdpPercap: 32170.0 },
];

export const OLYMPICS_ROWS = [
  { year: '1952', count: 10, sex: 'F' },
  { year: '1957', count: 14, sex: 'F' },
  { year: '1962', count: 19, sex: 'F' },
  { year: '1967', count: 25, sex: 'F' },
  { year: '1972', count: 33, sex: 'F' },
  { year: '1952', count: 90, sex: 'M' },
  { year: '1957', count: 88, sex: 'M' },
  { year: '1962', count: 85, sex: 'M' },
  { year: '1967', count: 80, sex: 'M' },
  { year: '1972', count: 76, sex: 'M' },
];

export const MOVIE_ROWS = [
  { title: 'A', genre: 'Action', studio: 'Alpha', gross: 120.5, rating: 7.1 },
  { title: 'B', genre: 'Action', studio: 'Beta', gross: 80.0, rating: 6.5 },
  { title: 'C', genre: 'Drama', studio: 'Alpha', gross: 45.2, rating: 8.0 },
  { title: 'D', genre: 'Drama', studio: 'Gamma', gross: 60.1, rating: 7.7 },
  { title: 'E', genre: 'Comedy', studio: 'Beta', gross: 95.9, rating: 6.9 },
  { title: 'F', genre: 'Comedy', studio: 'Gamma', gross: 30.4, rating: 5.8 },
  { title: 'G', genre: 'Action', studio: 'Alpha', gross: 200.0, rating: 7.9 },
  { title: 'H', genre: 'Drama', studio: 'Beta', gross: 15.3, rating: 8.4 },
];

export function unescapeHtml(text: string): string {
  return text
    .replace(/&lt;/g, '<')
    .replace(/&gt;/g, '>')
    .replace(/&quot;/g, '"')
    .replace(/&amp;/g, '&');
}

/** Pull the text of every element carrying the given class from an HTML string. */
export function displayedStrings(html: string, className: string): string[] {
  const pattern = new RegExp(`class="[^"]*${className}[^"]*"[^>]*>([^<]*)<`, 'g');
  const out: string[] = [];
  for (const match of html.matchAll(pattern)) {
    const text = unescapeHtml(match[1]).trim();
    if (text) out.push(text);
  }
  return out;
}
