// Names are shown inside ``` fences in the docs, not here.
const students = ['Alice', 'Bob', 'Cindy', 'David', 'Emma'];
document.getElementById('roll').addEventListener('click', () => {
  const pick = students[Math.floor(Math.random() * students.length)];
  document.getElementById('chosen').textContent = `${pick}`;
});
	
