/// Max-heap of variable indices ordered by an external activity array.
#[derive(Default, Debug)]
pub(crate) struct VarHeap {
    heap: Vec<u32>,
    // position of each variable in `heap`, or -1 when absent
    position: Vec<i32>,
}

impl VarHeap {
    pub(crate) fn grow(&mut self, num_vars: usize) {
        if self.position.len() < num_vars {
            self.position.resize(num_vars, -1);
        }
    }

    pub(crate) fn contains(&self, v: u32) -> bool {
        self.position[v as usize] >= 0
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub(crate) fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.position[v as usize] = self.heap.len() as i32;
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    /// Restores the heap order after `v`'s activity increased.
    pub(crate) fn increased(&mut self, v: u32, act: &[f64]) {
        let pos = self.position[v as usize];
        if pos >= 0 {
            self.sift_up(pos as usize, act);
        }
    }

    pub(crate) fn pop_max(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("nonempty");
        self.position[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.position[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if act[p as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = p;
            self.position[p as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.position[v as usize] = i as i32;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let child = if right < n && act[self.heap[right] as usize] > act[self.heap[left] as usize]
            {
                right
            } else {
                left
            };
            let c = self.heap[child];
            if act[c as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = c;
            self.position[c as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.position[v as usize] = i as i32;
    }
}
